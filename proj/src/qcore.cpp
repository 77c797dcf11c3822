#include "qlink/qcore.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

namespace qlink::qcore {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kInvSqrt2 = std::numbers::sqrt2 / 2.0;

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector kron(const Vector& a, const Vector& b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

void check_state(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw std::invalid_argument("density matrix must be square");
    if (!approx_equal(m, m.adjoint(), kDefaultTol))
        throw std::invalid_argument("density matrix must be Hermitian");
    if (std::abs(m.trace().real() - 1.0) > kDefaultTol || std::abs(m.trace().imag()) > kDefaultTol)
        throw std::invalid_argument("density matrix must have unit trace");
    Eigen::SelfAdjointEigenSolver<Matrix> es(((m + m.adjoint()) / 2.0).eval(),
                                             Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTol)
        throw std::invalid_argument("density matrix must be positive semidefinite");
}

}  // namespace

bool approx_equal(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    return ((a - b).cwiseAbs().maxCoeff() <= tol);
}

PureState::PureState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() < 1) throw std::invalid_argument("empty state");
    if (std::abs(amplitudes_.squaredNorm() - 1.0) > kDefaultTol)
        throw std::invalid_argument("pure state must be normalized");
}

Complex PureState::overlap(const PureState& other) const {
    if (dim() != other.dim()) throw std::invalid_argument("dimension mismatch");
    return amplitudes_.dot(other.amplitudes_);
}

DensityMatrix::DensityMatrix(Matrix m) : matrix_(std::move(m)) { check_state(matrix_); }

DensityMatrix DensityMatrix::pure(const PureState& psi) {
    const Vector& a = psi.amplitudes();
    return DensityMatrix((a * a.adjoint()).eval());
}

double AtomReadoutSetting::alpha_mod180() const {
    double a = std::fmod(alpha_deg, 180.0);
    if (a < 0.0) a += 180.0;
    return a;
}

PureState photon_state(PhotonBasis basis, PhotonOutcome outcome) {
    Vector v(2);
    const bool first = outcome == PhotonOutcome::first;
    switch (basis) {
        case PhotonBasis::HV:
            v << (first ? 1.0 : 0.0), (first ? 0.0 : 1.0);
            break;
        case PhotonBasis::DA:
            v << kInvSqrt2, (first ? kInvSqrt2 : -kInvSqrt2);
            break;
        case PhotonBasis::RL:
            // first = R = (H - iV)/sqrt(2), second = L = (H + iV)/sqrt(2)
            v << kInvSqrt2, (first ? -kI * kInvSqrt2 : kI * kInvSqrt2);
            break;
    }
    return PureState(v);
}

PureState atom_down_z() {
    Vector v = Vector::Zero(3);
    v(0) = 1.0;
    return PureState(v);
}

PureState atom_up_z() {
    Vector v = Vector::Zero(3);
    v(2) = 1.0;
    return PureState(v);
}

PureState bell_state_atom_photon() {
    const Vector l = photon_state(PhotonBasis::RL, PhotonOutcome::second).amplitudes();
    const Vector r = photon_state(PhotonBasis::RL, PhotonOutcome::first).amplitudes();
    const Vector down = atom_down_z().amplitudes();
    const Vector up = atom_up_z().amplitudes();
    Vector psi = kInvSqrt2 * (kron(l, down) + kron(r, up));
    return PureState(std::move(psi));
}

DensityMatrix werner_2x3(double v) {
    if (v < 0.0 || v > 1.0) throw std::domain_error("visibility must be in [0, 1]");
    const Vector psi = bell_state_atom_photon().amplitudes();
    Matrix rho = v * (psi * psi.adjoint()) + (1.0 - v) / 6.0 * Matrix::Identity(6, 6);
    return DensityMatrix(std::move(rho));
}

DensityMatrix werner_2x3_qubit_block(double v) {
    if (v < 0.0 || v > 1.0) throw std::domain_error("visibility must be in [0, 1]");
    const Vector psi = bell_state_atom_photon().amplitudes();
    Matrix block = Matrix::Zero(6, 6);
    for (int p = 0; p < 2; ++p)
        for (int a : {0, 2}) block(3 * p + a, 3 * p + a) = 0.25;
    Matrix rho = v * (psi * psi.adjoint()) + (1.0 - v) * block;
    return DensityMatrix(std::move(rho));
}

PureState bell_state_atom_atom() {
    Vector phi = Vector::Zero(9);
    phi(0) = kInvSqrt2;  // |down>|down> = (0,0)
    phi(8) = kInvSqrt2;  // |up>|up>     = (2,2)
    return PureState(std::move(phi));
}

DensityMatrix werner_atom_atom(double v) {
    if (v < 0.0 || v > 1.0) throw std::domain_error("visibility must be in [0, 1]");
    const Vector phi = bell_state_atom_atom().amplitudes();
    Matrix rho = v * (phi * phi.adjoint()) + (1.0 - v) / 9.0 * Matrix::Identity(9, 9);
    return DensityMatrix(std::move(rho));
}

double fidelity_to_target(const DensityMatrix& rho, const PureState& target) {
    if (rho.dim() != target.dim()) throw std::domain_error("dimension mismatch");
    const Vector& t = target.amplitudes();
    const Complex f = (t.adjoint() * rho.matrix() * t)(0, 0);
    if (std::abs(f.imag()) > kPsdTol)
        throw std::runtime_error("fidelity has non-negligible imaginary part");
    return std::clamp(f.real(), 0.0, 1.0);
}

Matrix photon_projector(const PhotonSetting& setting) {
    const Vector v = photon_state(setting.basis, setting.outcome).amplitudes();
    return v * v.adjoint();
}

namespace {

Vector dark_state_vector(const AtomReadoutSetting& s) {
    const double a = s.alpha_deg * std::numbers::pi / 180.0;
    const Complex phase = std::exp(kI * s.phi_rad);
    Vector v = Vector::Zero(3);
    // sin(a) (|down> - |up>)/sqrt(2) + cos(a) e^{i phi} i (|down> + |up>)/sqrt(2);
    // no m = 0 component: that population is always ionized.
    v(0) = kInvSqrt2 * (std::sin(a) + kI * phase * std::cos(a));
    v(2) = kInvSqrt2 * (-std::sin(a) + kI * phase * std::cos(a));
    return v;
}

Vector bright_state_vector(const AtomReadoutSetting& s) {
    const double a = s.alpha_deg * std::numbers::pi / 180.0;
    const Complex phase = std::exp(kI * s.phi_rad);
    Vector v = Vector::Zero(3);
    v(0) = kInvSqrt2 * (-std::cos(a) + kI * phase * std::sin(a));
    v(2) = kInvSqrt2 * (std::cos(a) + kI * phase * std::sin(a));
    return v;
}

}  // namespace

Matrix dark_state_projector(const AtomReadoutSetting& s) {
    const Vector v = dark_state_vector(s);
    return v * v.adjoint();
}

Matrix bright_state_projector(const AtomReadoutSetting& s) {
    const Vector v = bright_state_vector(s);
    return v * v.adjoint();
}

double joint_probability(const DensityMatrix& rho, const PhotonSetting& ps,
                         const AtomReadoutSetting& as, AtomOutcome outcome) {
    if (rho.dim() != 6) throw std::domain_error("joint_probability expects a 2x3 state");
    Matrix p_atom = dark_state_projector(as);
    if (outcome == AtomOutcome::ionized) p_atom = Matrix::Identity(3, 3) - p_atom;
    const Matrix op = kron(photon_projector(ps), p_atom);
    const double p = (rho.matrix() * op).trace().real();
    return std::clamp(p, 0.0, 1.0);
}

double chsh_correlator(const DensityMatrix& rho, PhotonBasis basis,
                       const AtomReadoutSetting& atom) {
    const PhotonSetting first{basis, PhotonOutcome::first};
    const PhotonSetting second{basis, PhotonOutcome::second};
    const double p_same = joint_probability(rho, first, atom, AtomOutcome::dark) +
                          joint_probability(rho, second, atom, AtomOutcome::ionized);
    const double p_diff = joint_probability(rho, first, atom, AtomOutcome::ionized) +
                          joint_probability(rho, second, atom, AtomOutcome::dark);
    return p_same - p_diff;
}

double chsh_s(const DensityMatrix& rho, const ChshSettings& s) {
    const double e_ab = chsh_correlator(rho, s.photon_a, s.atom_b);
    const double e_abp = chsh_correlator(rho, s.photon_a, s.atom_b_prime);
    const double e_apb = chsh_correlator(rho, s.photon_a_prime, s.atom_b);
    const double e_apbp = chsh_correlator(rho, s.photon_a_prime, s.atom_b_prime);
    return std::abs(e_ab - e_abp) + std::abs(e_apb + e_apbp);
}

DensityMatrix partial_trace(const DensityMatrix& rho, int dim_a, int dim_b,
                            bool keep_first) {
    if (dim_a < 1 || dim_b < 1 || dim_a * dim_b != rho.dim())
        throw std::domain_error("factor dimensions do not match the state");
    const Matrix& m = rho.matrix();
    if (keep_first) {
        Matrix out = Matrix::Zero(dim_a, dim_a);
        for (int i = 0; i < dim_a; ++i)
            for (int j = 0; j < dim_a; ++j)
                for (int k = 0; k < dim_b; ++k) out(i, j) += m(i * dim_b + k, j * dim_b + k);
        return DensityMatrix(std::move(out));
    }
    Matrix out = Matrix::Zero(dim_b, dim_b);
    for (int i = 0; i < dim_b; ++i)
        for (int j = 0; j < dim_b; ++j)
            for (int k = 0; k < dim_a; ++k) out(i, j) += m(k * dim_b + i, k * dim_b + j);
    return DensityMatrix(std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep) {
    if (rho.dim() != 6)
        throw std::domain_error("subsystem partial trace is declared for the 2x3 space");
    return partial_trace(rho, 2, 3, keep == Subsystem::photon);
}

}  // namespace qlink::qcore
