#pragma once

#include "jumpsde/levy_measure.hpp"
#include "jumpsde/model.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace jumpsde {

/// x -> nu(x, .), given as a sum of radial densities and atom lists on R^d.
using StateKernel = std::function<std::vector<LevyMeasure>(const Vec& x)>;

struct DecompositionOptions {
    /// Radial pieces with infinite mass near 0 are cut at this radius; 0
    /// means no cut (such pieces then raise SliceMassOverflow).
    double truncation = 0.0;
    /// Length of the mark slab [0, max_slabs) x [0, 1].
    int max_slabs = 64;
    int table_nodes = 2048;
};

/// One set A_n of the partition at a given state: an atom or a piece of an
/// annulus cut at radial-mass levels.
struct Slab {
    int component = 0;
    bool atom = false;
    Vec point;            ///< atom location
    double m0 = 0.0;      ///< radial mass below the piece
    double mass = 0.0;    ///< lambda on this slab, <= 1
};

/// The (gamma, lambda) pair realizing nu(x, .) as the image of Lebesgue
/// measure on [0, L) x [0, 1] under c(x, (xi, eta)) = gamma(x, xi) 1{eta <= lambda(x, xi)}.
class KernelDecomposition {
public:
    /// Frozen partition and inverse-CDF tables at one state.
    class AtState {
    public:
        const std::vector<Slab>& slabs() const { return slabs_; }
        double lambda(double xi) const;
        Vec gamma(double xi) const;
        /// c(x, u) for u = (xi, eta); zero when eta > lambda.
        Vec c(const Vec& u) const;

    private:
        friend class KernelDecomposition;
        struct Radial {
            LevyMeasure m;
            double lo = 0.0;
            double hi = 0.0;
            double total = 0.0;
            bool closed_form = false;
            double alpha = 0.0;
            std::vector<double> r, cum;  // tabulated cumulative mass
            double quantile(double mass) const;
        };
        int dim_ = 0;
        std::vector<Slab> slabs_;
        std::vector<Radial> radial_;
    };

    KernelDecomposition(int dim, StateKernel nu, DecompositionOptions opt = {});

    int dim() const { return dim_; }
    const DecompositionOptions& options() const { return opt_; }
    std::vector<LevyMeasure> kernel(const Vec& x) const { return nu_(x); }

    /// Builds the partition {A_n} at x. Throws SliceMassOverflow when an atom
    /// carries mass > 1 or more than max_slabs pieces are needed.
    AtState at(const Vec& x) const;

    double lambda(const Vec& x, double xi) const { return at(x).lambda(xi); }
    Vec gamma(const Vec& x, double xi) const { return at(x).gamma(xi); }
    Vec c(const Vec& x, const Vec& u) const { return at(x).c(u); }

    /// int y nu(x, dy) over the represented part (|y| > truncation).
    Vec first_moment(const Vec& x) const;
    /// int |y|^2 nu(x, dy) over the represented part.
    double second_moment(const Vec& x) const;
    /// Lebesgue measure on the slab, as a mark-space measure (split at 0:
    /// everything is "large").
    LevyMeasure mark_measure() const;

private:
    int dim_;
    StateKernel nu_;
    DecompositionOptions opt_;
};

std::shared_ptr<const KernelDecomposition> build_decomposition(int dim, StateKernel nu, DecompositionOptions opt = {});

/// The SDE driven by the decomposition: dX = b dt + sigma dW + int c(X-, u) Ntilde(du, dt)
/// with Ntilde compensated over the whole mark space. The compensator is
/// folded into the drift, so the Model carries uncompensated jumps.
Model decomposition_model(std::string name, int d, std::function<Vec(const Vec&)> drift,
                          std::function<Mat(const Vec&)> diffusion,
                          std::shared_ptr<const KernelDecomposition> dec);

/// dX = psi(X-) dL with L the Levy process of triplet (b, Q, nu): drift
/// psi b, diffusion psi sqrt(Q), jumps psi u compensated on |u| <= 1 only.
/// Throws NotPSD when Q has an eigenvalue below -tol.
Model levy_ito_model(int d, std::function<Mat(const Vec&)> psi, const Vec& b, const Mat& Q, const LevyMeasure& nu,
                     double tol = 1e-12);

}  // namespace jumpsde
