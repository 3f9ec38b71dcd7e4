#include "gridstate/estimator.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "gridstate/errors.hpp"
#include "gridstate/stats.hpp"

namespace gridstate {

namespace {

double one_norm(const SparseComplexMatrix& a) {
    double best = 0.0;
    for (int col = 0; col < a.outerSize(); ++col) {
        double sum = 0.0;
        for (SparseComplexMatrix::InnerIterator it(a, col); it; ++it) sum += std::abs(it.value());
        best = std::max(best, sum);
    }
    return best;
}

// Hager-Higham estimate of ||A^-1||_1 using a handful of solves. A is
// Hermitian here, so the adjoint solve reuses the same factorization.
double inverse_one_norm_estimate(const Eigen::SparseLU<SparseComplexMatrix>& lu,
                                 Eigen::Index dim) {
    ComplexVector x = ComplexVector::Constant(dim, Complex(1.0 / static_cast<double>(dim), 0.0));
    double estimate = 0.0;
    for (int iteration = 0; iteration < 5; ++iteration) {
        ComplexVector y = lu.solve(x);
        const double norm_y = y.cwiseAbs().sum();
        if (iteration > 0 && norm_y <= estimate) break;
        estimate = norm_y;
        ComplexVector xi(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double mag = std::abs(y(i));
            xi(i) = mag > 0.0 ? y(i) / mag : Complex(1.0, 0.0);
        }
        ComplexVector zv = lu.solve(xi);
        Eigen::Index j = 0;
        zv.cwiseAbs().maxCoeff(&j);
        if (std::abs(zv(j)) <= std::abs(zv.dot(x))) break;
        x.setZero();
        x(j) = Complex(1.0, 0.0);
    }
    return estimate;
}

}  // namespace

struct LeanSolve {
    ComplexVector x_hat;
    ComplexVector lagrange;
    double stationarity_residual = 0.0;
    double constraint_residual = 0.0;
    double conjugate_symmetry_error = 0.0;
};

struct AugmentedSystem::Impl {
    std::size_t n_states = 0;
    std::size_t n_constraints = 0;
    std::vector<std::size_t> positions;  // per measurement row
    Eigen::VectorXd p;                   // P diagonal (real)
    ComplexVector w;                     // W diagonal
    SparseComplexMatrix a;               // 2(N+Q) square
    SparseComplexMatrix c;               // Q x N
    ComplexVector c_rhs;                 // Q
    Eigen::SparseLU<SparseComplexMatrix> lu;
    double rcond = 0.0;
    EstimatorOptions options;

    // Data-independent covariance payload.
    ComplexVector f1_diag;
    ComplexVector f2_diag;
    std::vector<Eigen::Matrix2d> covariances;
    double max_cov_asymmetry = 0.0;

    // diag(G1), diag(G2) for residual checks.
    ComplexVector g1_diag;
    ComplexVector g2_diag;

    void factorize() {
        lu.compute(a);
        if (lu.info() != Eigen::Success) {
            throw NonIdentifiableError(
                "augmented system is singular: the measurements and constraints do not "
                "determine a unique state",
                0.0);
        }
        const double inv_norm = inverse_one_norm_estimate(lu, a.rows());
        const double norm = one_norm(a);
        rcond = (norm > 0.0 && inv_norm > 0.0) ? 1.0 / (norm * inv_norm) : 0.0;
        if (rcond < options.rcond_threshold) {
            throw NonIdentifiableError(
                "augmented system is numerically rank deficient (rcond estimate " +
                    std::to_string(rcond) + ")",
                rcond);
        }
    }

    ComplexVector solve_refined(const ComplexVector& rhs) const {
        ComplexVector solution = lu.solve(rhs);
        for (int step = 0; step < options.refinement_steps; ++step) {
            ComplexVector residual = rhs - a * solution;
            solution += lu.solve(residual);
        }
        return solution;
    }

    ComplexVector build_g(const ComplexVector& z) const {
        ComplexVector g = ComplexVector::Zero(static_cast<Eigen::Index>(n_states));
        for (std::size_t k = 0; k < positions.size(); ++k) {
            const auto row = static_cast<Eigen::Index>(k);
            g(static_cast<Eigen::Index>(positions[k])) +=
                2.0 * (z(row) - w(row) * std::conj(z(row))) / p(row);
        }
        return g;
    }

    LeanSolve lean_solve(const ComplexVector& z) const;

    void compute_covariances() {
        const auto n = static_cast<Eigen::Index>(n_states);
        const Eigen::Index dim = a.rows();
        f1_diag.resize(n);
        f2_diag.resize(n);
        covariances.resize(n_states);

        // Column i of A^-1 yields F1_ii directly; the Hermitian symmetry of A
        // gives F2_ii = conj((A^-1)_{N+i,i}) from the same column.
        ComplexVector unit = ComplexVector::Zero(dim);
        for (Eigen::Index i = 0; i < n; ++i) {
            unit(i) = Complex(1.0, 0.0);
            ComplexVector column = solve_refined(unit);
            unit(i) = Complex(0.0, 0.0);
            f1_diag(i) = column(i);
            f2_diag(i) = std::conj(column(n + i));

            const Eigen::Matrix2d raw = index_covariance_from_f(f1_diag(i), f2_diag(i));
            const double asymmetry = std::abs(raw(0, 1) - raw(1, 0));
            max_cov_asymmetry = std::max(max_cov_asymmetry, asymmetry);
            Eigen::Matrix2d cov = raw;
            const double off = 0.5 * (raw(0, 1) + raw(1, 0));
            cov(0, 1) = off;
            cov(1, 0) = off;

            const double trace = cov.trace();
            const double det = cov.determinant();
            const double scale = std::max(trace, 1e-300);
            const double min_eig = 0.5 * (trace - std::hypot(cov(0, 0) - cov(1, 1), 2.0 * off));
            if (trace < -1e-10 * scale || min_eig < -1e-10 * scale || det < -1e-10 * scale * scale) {
                throw NumericalError("estimator covariance at index " + std::to_string(i) +
                                     " is not positive semi-definite");
            }
            covariances[static_cast<std::size_t>(i)] = cov;
        }
    }
};

AugmentedSystem::AugmentedSystem(const SelectionMatrix& selection,
                                 const ConstraintSystem& constraints,
                                 const Eigen::VectorXd& sigma1, const ComplexVector& sigma2,
                                 const EstimatorOptions& options)
    : impl_(std::make_unique<Impl>()) {
    const auto k_rows = static_cast<Eigen::Index>(selection.rows());
    if (sigma1.size() != k_rows || sigma2.size() != k_rows) {
        throw InputError("covariance diagonals do not match the number of measurement rows");
    }
    const auto n = static_cast<Eigen::Index>(selection.D.cols());
    if (constraints.C.cols() != n) {
        throw InputError("constraint matrix width does not match the state dimension");
    }

    Impl& impl = *impl_;
    impl.options = options;
    impl.n_states = static_cast<std::size_t>(n);
    impl.n_constraints = static_cast<std::size_t>(constraints.C.rows());
    impl.positions = selection.positions;
    impl.c = constraints.C;
    impl.c_rhs = constraints.c;

    impl.p.resize(k_rows);
    impl.w.resize(k_rows);
    for (Eigen::Index k = 0; k < k_rows; ++k) {
        const double s1 = sigma1(k);
        if (!(s1 > 0.0)) {
            throw NumericalError("sigma1 diagonal entry " + std::to_string(k) +
                                 " is not positive");
        }
        const double s2_mag = std::abs(sigma2(k));
        const double p_k = s1 - s2_mag * s2_mag / s1;
        if (!(p_k > 0.0)) {
            throw NumericalError(
                "P = Sigma1* - Sigma2^H Sigma1^-1 Sigma2 is not positive definite at row " +
                std::to_string(k) + " (|pseudo-variance| >= variance)");
        }
        impl.p(k) = p_k;
        impl.w(k) = sigma2(k) / s1;
    }

    // diag(G1), diag(G2) accumulated over measurement rows.
    impl.g1_diag = ComplexVector::Zero(n);
    impl.g2_diag = ComplexVector::Zero(n);
    for (Eigen::Index k = 0; k < k_rows; ++k) {
        const auto pos = static_cast<Eigen::Index>(impl.positions[static_cast<std::size_t>(k)]);
        impl.g1_diag(pos) += Complex(2.0 / impl.p(k), 0.0);
        impl.g2_diag(pos) += -2.0 * impl.w(k) / impl.p(k);
    }

    const auto q = static_cast<Eigen::Index>(impl.n_constraints);
    const Eigen::Index dim = 2 * n + 2 * q;
    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(static_cast<std::size_t>(4 * n + 6 * constraints.C.nonZeros()));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (impl.g1_diag(i) != Complex(0.0, 0.0)) {
            triplets.emplace_back(i, i, impl.g1_diag(i));
            triplets.emplace_back(n + i, n + i, std::conj(impl.g1_diag(i)));
        }
        if (impl.g2_diag(i) != Complex(0.0, 0.0)) {
            triplets.emplace_back(i, n + i, impl.g2_diag(i));
            triplets.emplace_back(n + i, i, std::conj(impl.g2_diag(i)));
        }
    }
    for (int col = 0; col < impl.c.outerSize(); ++col) {
        for (SparseComplexMatrix::InnerIterator it(impl.c, col); it; ++it) {
            const Eigen::Index row_q = it.row();
            const Eigen::Index col_i = it.col();
            const Complex value = it.value();
            // C-bar block and its adjoint.
            triplets.emplace_back(2 * n + row_q, col_i, value);
            triplets.emplace_back(2 * n + q + row_q, n + col_i, std::conj(value));
            triplets.emplace_back(col_i, 2 * n + row_q, std::conj(value));
            triplets.emplace_back(n + col_i, 2 * n + q + row_q, value);
        }
    }
    impl.a.resize(dim, dim);
    impl.a.setFromTriplets(triplets.begin(), triplets.end());
    impl.a.makeCompressed();

    impl.factorize();
    impl.compute_covariances();
}

AugmentedSystem::AugmentedSystem(const AugmentedSystem& other)
    : impl_(std::make_unique<Impl>()) {
    Impl& impl = *impl_;
    const Impl& src = *other.impl_;
    impl.n_states = src.n_states;
    impl.n_constraints = src.n_constraints;
    impl.positions = src.positions;
    impl.p = src.p;
    impl.w = src.w;
    impl.a = src.a;
    impl.c = src.c;
    impl.c_rhs = src.c_rhs;
    impl.options = src.options;
    impl.f1_diag = src.f1_diag;
    impl.f2_diag = src.f2_diag;
    impl.covariances = src.covariances;
    impl.max_cov_asymmetry = src.max_cov_asymmetry;
    impl.g1_diag = src.g1_diag;
    impl.g2_diag = src.g2_diag;
    impl.factorize();
}

AugmentedSystem::~AugmentedSystem() = default;

std::size_t AugmentedSystem::num_states() const { return impl_->n_states; }
std::size_t AugmentedSystem::num_constraints() const { return impl_->n_constraints; }
std::size_t AugmentedSystem::num_measurements() const { return impl_->positions.size(); }
double AugmentedSystem::rcond() const { return impl_->rcond; }
const std::vector<Eigen::Matrix2d>& AugmentedSystem::index_covariances() const {
    return impl_->covariances;
}
const ComplexVector& AugmentedSystem::f1_diag() const { return impl_->f1_diag; }
const ComplexVector& AugmentedSystem::f2_diag() const { return impl_->f2_diag; }
double AugmentedSystem::max_covariance_asymmetry() const { return impl_->max_cov_asymmetry; }

ComplexVector AugmentedSystem::solve_state(const ComplexVector& z) const {
    return std::move(impl_->lean_solve(z).x_hat);
}

EstimateResult AugmentedSystem::estimate(const ComplexVector& z) const {
    const Impl& impl = *impl_;
    LeanSolve lean = impl.lean_solve(z);

    EstimateResult result;
    result.rcond = impl.rcond;
    result.x_hat = std::move(lean.x_hat);
    result.lagrange = std::move(lean.lagrange);
    result.stationarity_residual = lean.stationarity_residual;
    result.constraint_residual = lean.constraint_residual;
    result.conjugate_symmetry_error = lean.conjugate_symmetry_error;
    result.f1_diag = impl.f1_diag;
    result.f2_diag = impl.f2_diag;
    result.covariances = impl.covariances;
    return result;
}

LeanSolve AugmentedSystem::Impl::lean_solve(const ComplexVector& z) const {
    const Impl& impl = *this;
    if (z.size() != static_cast<Eigen::Index>(impl.positions.size())) {
        throw InputError("measurement vector length does not match the selection");
    }
    const auto n = static_cast<Eigen::Index>(impl.n_states);
    const auto q = static_cast<Eigen::Index>(impl.n_constraints);

    const ComplexVector g = impl.build_g(z);
    ComplexVector rhs(2 * n + 2 * q);
    rhs.segment(0, n) = g;
    rhs.segment(n, n) = g.conjugate();
    rhs.segment(2 * n, q) = impl.c_rhs;
    rhs.segment(2 * n + q, q) = impl.c_rhs.conjugate();

    const ComplexVector solution = impl.solve_refined(rhs);

    LeanSolve result;
    result.x_hat.resize(n);
    double conj_err = 0.0;
    double x_scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex upper = solution(i);
        const Complex lower = std::conj(solution(n + i));
        result.x_hat(i) = 0.5 * (upper + lower);
        conj_err = std::max(conj_err, std::abs(upper - lower));
        x_scale = std::max(x_scale, std::abs(result.x_hat(i)));
    }
    result.lagrange.resize(q);
    for (Eigen::Index j = 0; j < q; ++j) {
        result.lagrange(j) =
            0.5 * (solution(2 * n + j) + std::conj(solution(2 * n + q + j)));
    }
    result.conjugate_symmetry_error = x_scale > 0.0 ? conj_err / x_scale : conj_err;

    // Stationarity: -g + G1 x + G2 x* + C^H lambda = 0.
    ComplexVector stationarity = -g;
    stationarity += impl.g1_diag.cwiseProduct(result.x_hat);
    stationarity += impl.g2_diag.cwiseProduct(result.x_hat.conjugate());
    stationarity += impl.c.adjoint() * result.lagrange;
    const double g_scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
    result.stationarity_residual = stationarity.cwiseAbs().maxCoeff() / g_scale;

    ComplexVector constraint_gap = impl.c * result.x_hat - impl.c_rhs;
    double c_norm = 0.0;
    for (int col = 0; col < impl.c.outerSize(); ++col) {
        for (SparseComplexMatrix::InnerIterator it(impl.c, col); it; ++it) {
            c_norm = std::max(c_norm, std::abs(it.value()));
        }
    }
    const double c_scale =
        std::max(c_norm * std::max(x_scale, 1.0) + impl.c_rhs.cwiseAbs().maxCoeff(), 1e-300);
    result.constraint_residual =
        q > 0 ? constraint_gap.cwiseAbs().maxCoeff() / c_scale : 0.0;

    if (result.stationarity_residual > impl.options.stationarity_tol) {
        throw NumericalError("estimate stationarity residual " +
                             std::to_string(result.stationarity_residual) +
                             " exceeds tolerance");
    }
    if (result.constraint_residual > impl.options.constraint_tol) {
        throw NumericalError("estimate constraint residual " +
                             std::to_string(result.constraint_residual) + " exceeds tolerance");
    }
    return result;
}

std::pair<ComplexMatrix, ComplexMatrix> AugmentedSystem::f11_blocks() const {
    const Impl& impl = *impl_;
    const auto n = static_cast<Eigen::Index>(impl.n_states);
    const Eigen::Index dim = impl.a.rows();
    ComplexMatrix f1(n, n);
    ComplexMatrix f2(n, n);
    ComplexVector unit = ComplexVector::Zero(dim);
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
        unit(j) = Complex(1.0, 0.0);
        ComplexVector column = impl.solve_refined(unit);
        unit(j) = Complex(0.0, 0.0);
        if (j < n) {
            f1.col(j) = column.segment(0, n);
        } else {
            f2.col(j - n) = column.segment(0, n);
        }
    }
    return {std::move(f1), std::move(f2)};
}

AugmentedSystem assemble(const ComplexVector& z, const Eigen::VectorXd& sigma1,
                         const ComplexVector& sigma2, const SelectionMatrix& selection,
                         const ConstraintSystem& constraints, const EstimatorOptions& options) {
    if (z.size() != static_cast<Eigen::Index>(selection.rows())) {
        throw InputError("measurement vector length does not match the selection");
    }
    return AugmentedSystem(selection, constraints, sigma1, sigma2, options);
}

Eigen::Matrix2d index_covariance_from_f(Complex f1_ii, Complex f2_ii) {
    Eigen::Matrix2d cov;
    cov(0, 0) = (f1_ii + f2_ii).real();
    cov(0, 1) = (-f1_ii + f2_ii).imag();
    cov(1, 0) = (f1_ii + f2_ii).imag();
    cov(1, 1) = (f1_ii - f2_ii).real();
    return cov;
}

ConfidenceInterval confidence_interval(const EstimateResult& result, std::size_t index,
                                       double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    const auto i = static_cast<Eigen::Index>(index);
    const double var_re = (result.f1_diag(i) + result.f2_diag(i)).real();
    const double var_im = (result.f1_diag(i) - result.f2_diag(i)).real();
    if (var_re < 0.0 || var_im < 0.0) {
        throw NumericalError("confidence interval: negative variance, covariance inconsistent");
    }
    const double zq = normal_quantile(1.0 - 0.5 * alpha);
    const double re = result.x_hat(i).real();
    const double im = result.x_hat(i).imag();
    return {re - zq * std::sqrt(var_re), re + zq * std::sqrt(var_re),
            im - zq * std::sqrt(var_im), im + zq * std::sqrt(var_im)};
}

namespace {

// Eigen-decomposition of a symmetric 2x2 matrix in closed form; returns
// eigenvalues (descending) and the angle of the leading eigenvector, with the
// sign convention v1 >= 0 (v2 >= 0 when v1 = 0) and angle 0 for exact ties.
struct Eigen2 {
    double e1, e2, angle;
};

Eigen2 symmetric_eigen2(const Eigen::Matrix2d& m) {
    const double a = m(0, 0);
    const double b = 0.5 * (m(0, 1) + m(1, 0));
    const double d = m(1, 1);
    const double half_trace = 0.5 * (a + d);
    const double radius = std::hypot(0.5 * (a - d), b);
    Eigen2 out;
    out.e1 = half_trace + radius;
    out.e2 = half_trace - radius;
    if (radius == 0.0) {
        out.angle = 0.0;
        return out;
    }
    // Leading eigenvector: (b, e1 - a) or (e1 - d, b), whichever has the
    // larger norm.
    double v1, v2;
    const double norm_first = b * b + (out.e1 - a) * (out.e1 - a);
    const double norm_second = (out.e1 - d) * (out.e1 - d) + b * b;
    if (norm_first > norm_second) {
        v1 = b;
        v2 = out.e1 - a;
    } else {
        v1 = out.e1 - d;
        v2 = b;
    }
    if (v1 == 0.0 && v2 == 0.0) {
        out.angle = 0.0;
        return out;
    }
    if (v1 < 0.0 || (v1 == 0.0 && v2 < 0.0)) {
        v1 = -v1;
        v2 = -v2;
    }
    out.angle = v1 == 0.0 ? 1.5707963267948966 : std::atan(v2 / v1);
    return out;
}

}  // namespace

ConfidenceEllipse ellipse_from_covariance(const Eigen::Matrix2d& covariance, Complex center,
                                          double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    const Eigen2 eig = symmetric_eigen2(covariance);
    const double chi2 = chi2_quantile_2dof(1.0 - alpha);
    ConfidenceEllipse ellipse;
    ellipse.center = center;
    ellipse.angle = eig.angle;
    ellipse.semi_major = std::sqrt(std::max(eig.e1, 0.0) * chi2);
    ellipse.semi_minor = std::sqrt(std::max(eig.e2, 0.0) * chi2);
    ellipse.alpha = alpha;
    return ellipse;
}

ConfidenceEllipse confidence_ellipse(const EstimateResult& result, std::size_t index,
                                     double alpha) {
    return ellipse_from_covariance(result.covariances[index],
                                   result.x_hat(static_cast<Eigen::Index>(index)), alpha);
}

bool ellipse_contains(const Eigen::Matrix2d& covariance, Complex center, Complex point,
                      double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0,1)");
    const double chi2 = chi2_quantile_2dof(1.0 - alpha);
    const Eigen2 eig = symmetric_eigen2(covariance);
    const double cos_a = std::cos(eig.angle);
    const double sin_a = std::sin(eig.angle);
    const double dx = point.real() - center.real();
    const double dy = point.imag() - center.imag();
    // Components along the principal axes.
    const double comp1 = cos_a * dx + sin_a * dy;
    const double comp2 = -sin_a * dx + cos_a * dy;

    double distance_sq = 0.0;
    const double comps[2] = {comp1, comp2};
    const double eigs[2] = {eig.e1, eig.e2};
    for (int axis = 0; axis < 2; ++axis) {
        if (eigs[axis] <= 0.0) {
            if (std::abs(comps[axis]) > 1e-12) return false;
            continue;  // pseudo-inverse: zero contribution along degenerate axis
        }
        distance_sq += comps[axis] * comps[axis] / eigs[axis];
    }
    return distance_sq <= chi2;
}

bool ellipse_contains(const ConfidenceEllipse& ellipse, Complex point) {
    const double cos_a = std::cos(ellipse.angle);
    const double sin_a = std::sin(ellipse.angle);
    const double dx = point.real() - ellipse.center.real();
    const double dy = point.imag() - ellipse.center.imag();
    const double comp1 = cos_a * dx + sin_a * dy;
    const double comp2 = -sin_a * dx + cos_a * dy;
    double distance_sq = 0.0;
    const double comps[2] = {comp1, comp2};
    const double axes[2] = {ellipse.semi_major, ellipse.semi_minor};
    for (int axis = 0; axis < 2; ++axis) {
        if (axes[axis] <= 0.0) {
            if (std::abs(comps[axis]) > 1e-12) return false;
            continue;
        }
        const double ratio = comps[axis] / axes[axis];
        distance_sq += ratio * ratio;
    }
    return distance_sq <= 1.0;
}

Eigen::MatrixXd real_state_covariance(const ComplexMatrix& f1, const ComplexMatrix& f2) {
    const Eigen::Index n = f1.rows();
    Eigen::MatrixXd cov(2 * n, 2 * n);
    cov.topLeftCorner(n, n) = (f1 + f2).real();
    cov.topRightCorner(n, n) = (-f1 + f2).imag();
    cov.bottomLeftCorner(n, n) = (f1 + f2).imag();
    cov.bottomRightCorner(n, n) = (f1 - f2).real();
    return 0.5 * (cov + cov.transpose());
}

Eigen::MatrixXd constraint_null_basis(const ConstraintSystem& constraints,
                                      std::size_t n_states) {
    const auto n = static_cast<Eigen::Index>(n_states);
    const Eigen::Index q = constraints.C.rows();
    Eigen::MatrixXd c_real = Eigen::MatrixXd::Zero(2 * q, 2 * n);
    for (int col = 0; col < constraints.C.outerSize(); ++col) {
        for (SparseComplexMatrix::InnerIterator it(constraints.C, col); it; ++it) {
            const Eigen::Index r = it.row();
            const Eigen::Index i = it.col();
            c_real(r, i) = it.value().real();
            c_real(r, n + i) = -it.value().imag();
            c_real(q + r, i) = it.value().imag();
            c_real(q + r, n + i) = it.value().real();
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(c_real);
    Eigen::MatrixXd kernel = lu.kernel();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
    Eigen::MatrixXd q_full = qr.householderQ();
    return q_full.leftCols(kernel.cols());
}

CrlbVerdict crlb_check(const Eigen::MatrixXd& empirical_cov, const Eigen::MatrixXd& bound_cov,
                       const Eigen::MatrixXd& null_basis, std::size_t repetitions) {
    const Eigen::MatrixXd difference =
        null_basis.transpose() * (empirical_cov - bound_cov) * null_basis;
    const Eigen::MatrixXd symmetric = 0.5 * (difference + difference.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigensolver(symmetric);

    const Eigen::MatrixXd projected_bound = null_basis.transpose() * bound_cov * null_basis;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bound_eigs(
        0.5 * (projected_bound + projected_bound.transpose()));
    const double bound_scale = bound_eigs.eigenvalues().cwiseAbs().maxCoeff();

    CrlbVerdict verdict;
    verdict.min_eigenvalue = eigensolver.eigenvalues().minCoeff();
    verdict.max_eigenvalue = eigensolver.eigenvalues().maxCoeff();
    verdict.eps_stat =
        3.0 * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(repetitions, 1))) *
        bound_scale;
    verdict.bound_satisfied = verdict.min_eigenvalue >= -verdict.eps_stat;
    verdict.attained = verdict.bound_satisfied && verdict.max_eigenvalue <= verdict.eps_stat;
    return verdict;
}

}  // namespace gridstate
