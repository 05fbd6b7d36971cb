#pragma once

#include "jumpsde/model.hpp"

#include <string>
#include <vector>

namespace jumpsde {

/// gamma with gamma^2 int |u|^2 nu(du) = 1/2 for nu = du/|u|^{3+alpha} on
/// the unit ball of R^3.
double example_gamma(double alpha);

/// d = 3, signed-power drift and state-dependent diffusion, radial jumps.
Model example1(double alpha = 0.5);
/// d = 3, constant sigma = [[3,1,2],[2,3,1],[1,2,3]], same drift and jumps.
Model example2(double alpha = 0.5);
/// d = 2, b = -x, sigma = I, c = (1 + sin(x1)/2) u, nu uniform on the unit
/// ball with mass 1.
Model ou_jumps();
/// d = 2, b = x^3 componentwise, no noise.
Model cubic_explosion();

Model ou(int d, double theta = 1.0, double s = 1.0);
Model brownian(int d, double s = 1.0);
Model zero_model(int d);
/// dX_j = a X_j dt + s X_j dW_j.
Model geometric(int d, double a, double s);
/// dX = a X dt.
Model linear_ode(int d, double a);
/// d = 2 finite-time pull to the origin, -3 spow(x, 1/3), with small
/// sqrt(|x|) noise; distinct starts meet.
Model confluence_demo();
/// d = 2, c(x, u) = sign(x1) u, nu a unit atom at (1, 0); discontinuous in x.
Model nonfeller_demo();

/// Example1, Example2, OU-with-jumps, CubicExplosion.
std::vector<Model> builtin_models();
/// Lookup by name, including the helpers above. Throws InvalidArgument.
Model builtin_by_name(const std::string& name, int d = 2);
std::vector<std::string> builtin_names();

}  // namespace jumpsde
