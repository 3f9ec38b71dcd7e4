#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <vector>

#include "gridstate/constraints.hpp"
#include "gridstate/topology.hpp"

namespace gridstate {

using ComplexMatrix = Eigen::MatrixXcd;

struct EstimatorOptions {
    /// Reciprocal-condition estimate below which the system is rejected as
    /// non-identifiable instead of returning a pseudo-inverse solution.
    double rcond_threshold = 1e-12;
    double stationarity_tol = 1e-8;  // relative
    double constraint_tol = 1e-10;   // relative
    int refinement_steps = 2;
};

struct EstimateResult {
    ComplexVector x_hat;    // N
    ComplexVector lagrange; // Q
    ComplexVector f1_diag;  // diagonal of F1 (upper-left block of F11-bar)
    ComplexVector f2_diag;  // diagonal of F2 (upper-right block)
    std::vector<Eigen::Matrix2d> covariances;  // per-index 2x2 real covariance of x_hat_i
    double stationarity_residual = 0.0;        // relative
    double constraint_residual = 0.0;          // relative
    double conjugate_symmetry_error = 0.0;
    double rcond = 0.0;
};

struct ConfidenceInterval {
    double re_lo, re_hi, im_lo, im_hi;
};

struct ConfidenceEllipse {
    Complex center;
    double angle = 0.0;       // radians in (-pi/2, pi/2]
    double semi_major = 0.0;
    double semi_minor = 0.0;
    double alpha = 0.05;      // significance level; confidence = 1 - alpha
};

/// The saddle-point system of the constrained widely linear ML problem,
///
///   [ G-bar  C-bar^H ] [ x-bar      ]   [ g-bar ]
///   [ C-bar  O       ] [ lambda-bar ] = [ c-bar ]
///
/// with G1 = 2 D^H (P*)^-1 D, G2 = -2 D^H (P*)^-1 W D*, P = S1* - S2^H S1^-1 S2
/// and W = S2 (S1*)^-1, exploiting that S1, S2 (and hence P, W) are diagonal.
///
/// The factorization depends only on (D, C, S1, S2) and is reused across
/// solves with different measurement vectors z. Immutable after construction
/// and safe to share across threads read-only; copying refactorizes, which is
/// how per-worker solver instances are made.
class AugmentedSystem {
  public:
    AugmentedSystem(const SelectionMatrix& selection, const ConstraintSystem& constraints,
                    const Eigen::VectorXd& sigma1, const ComplexVector& sigma2,
                    const EstimatorOptions& options = {});
    AugmentedSystem(const AugmentedSystem& other);
    AugmentedSystem& operator=(const AugmentedSystem&) = delete;

    std::size_t num_states() const;
    std::size_t num_constraints() const;
    std::size_t num_measurements() const;
    double rcond() const;

    /// Solves for the given prepared measurement vector.
    EstimateResult estimate(const ComplexVector& z) const;

    /// Solve returning only the state estimate (residual-checked); used by
    /// Monte-Carlo loops where the covariance payload is shared.
    ComplexVector solve_state(const ComplexVector& z) const;

    /// Per-index 2x2 covariances of the estimate (data independent).
    const std::vector<Eigen::Matrix2d>& index_covariances() const;
    const ComplexVector& f1_diag() const;
    const ComplexVector& f2_diag() const;
    double max_covariance_asymmetry() const;

    /// Full F1, F2 blocks of F11-bar (N x N each). Costs 2N sparse solves;
    /// intended for diagnostics and small-grid verification.
    std::pair<ComplexMatrix, ComplexMatrix> f11_blocks() const;

    ~AugmentedSystem();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// assemble + estimate convenience mirroring the one-shot pipeline.
AugmentedSystem assemble(const ComplexVector& z, const Eigen::VectorXd& sigma1,
                         const ComplexVector& sigma2, const SelectionMatrix& selection,
                         const ConstraintSystem& constraints,
                         const EstimatorOptions& options = {});

/// Covariance matrix of x_hat_i as a real 2-vector (Re, Im):
/// [[Re(F1+F2), Im(-F1+F2)], [Im(F1+F2), Re(F1-F2)]] at index i.
Eigen::Matrix2d index_covariance_from_f(Complex f1_ii, Complex f2_ii);

ConfidenceInterval confidence_interval(const EstimateResult& result, std::size_t index,
                                       double alpha);

ConfidenceEllipse confidence_ellipse(const EstimateResult& result, std::size_t index,
                                     double alpha);

/// Ellipse of the chi-square(2) level set of a 2x2 covariance around center.
ConfidenceEllipse ellipse_from_covariance(const Eigen::Matrix2d& covariance, Complex center,
                                          double alpha);

/// Mahalanobis membership test, equivalent to geometric point-in-ellipse.
/// Degenerate covariance axes use the pseudo-inverse with an exact-zero
/// tolerance of 1e-12 on the offending component.
bool ellipse_contains(const Eigen::Matrix2d& covariance, Complex center, Complex point,
                      double alpha);
bool ellipse_contains(const ConfidenceEllipse& ellipse, Complex point);

/// Real 2N x 2N covariance of [Re x_hat; Im x_hat] from the F11-bar blocks.
Eigen::MatrixXd real_state_covariance(const ComplexMatrix& f1, const ComplexMatrix& f2);

/// Orthonormal basis (2N x (2N - rank)) of the real null space of C,
/// i.e. the subspace on which estimates can actually vary.
Eigen::MatrixXd constraint_null_basis(const ConstraintSystem& constraints, std::size_t n_states);

struct CrlbVerdict {
    bool bound_satisfied = false;  // min eigenvalue >= -eps_stat
    bool attained = false;         // additionally max eigenvalue <= eps_stat
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double eps_stat = 0.0;
};

/// Compares an empirical estimator covariance against the bound 2 F11-bar
/// (both in the real 2N representation), restricted to the constraint null
/// space where the bound is informative.
CrlbVerdict crlb_check(const Eigen::MatrixXd& empirical_cov, const Eigen::MatrixXd& bound_cov,
                       const Eigen::MatrixXd& null_basis, std::size_t repetitions);

}  // namespace gridstate
