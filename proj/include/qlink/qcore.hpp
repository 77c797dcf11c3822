#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

// Exact finite-dimensional state representation and measurement algebra for
// the atom (qutrit) (x) photon (qubit) space and the atom (x) atom space.
//
// Fixed conventions (unit tested, see test_qcore.cpp):
//   - photon computational basis {|H>, |V>}; |D/A> = (|H> +- |V>)/sqrt(2);
//     |L> = (|H> + i|V>)/sqrt(2), |R> = (|H> - i|V>)/sqrt(2), equivalently
//     H = (L + R)/sqrt(2) and V = -i(L - R)/sqrt(2).
//   - atom basis ordered (m = -1, 0, +1), i.e. (|down>_z, |m0>, |up>_z);
//   - tensor order photon (x) atom: index = 3*photon + atom.
namespace qlink::qcore {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kDefaultTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

bool approx_equal(const Matrix& a, const Matrix& b, double tol = kDefaultTol);

// Normalized pure state.
class PureState {
public:
    explicit PureState(Vector amplitudes);

    int dim() const { return static_cast<int>(amplitudes_.size()); }
    const Vector& amplitudes() const { return amplitudes_; }
    Complex overlap(const PureState& other) const;  // <this|other>

private:
    Vector amplitudes_;
};

// Hermitian, unit-trace, positive-semidefinite (within kPsdTol) matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(Matrix m);
    static DensityMatrix pure(const PureState& psi);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const Matrix& matrix() const { return matrix_; }

private:
    Matrix matrix_;
};

enum class PhotonBasis { HV, DA, RL };
enum class PhotonOutcome { first, second };  // H/D/R vs V/A/L

struct PhotonSetting {
    PhotonBasis basis = PhotonBasis::HV;
    PhotonOutcome outcome = PhotonOutcome::first;
};

enum class AtomOutcome { dark, ionized };

// Readout polarization angle; 0 deg corresponds to vertical polarization.
// Fringes are periodic in alpha with period 180 deg.
struct AtomReadoutSetting {
    double alpha_deg = 0.0;
    double phi_rad = 0.0;

    double alpha_mod180() const;
};

// Single-particle basis states.
PureState photon_state(PhotonBasis basis, PhotonOutcome outcome);  // dim 2
PureState atom_down_z();                                           // dim 3, m = -1
PureState atom_up_z();                                             // dim 3, m = +1

// (|L>|down>_z + |R>|up>_z)/sqrt(2), dim 6. Also equals
// (|V>|down>_x + |H>|up>_x)/sqrt(2) with |up>_x = (|down>_z + |up>_z)/sqrt(2)
// and |down>_x = i(|down>_z - |up>_z)/sqrt(2).
PureState bell_state_atom_photon();

// v |Psi><Psi| + (1 - v) I/6 on the photon (x) atom space.
DensityMatrix werner_2x3(double v);

// Same mixture but with white noise confined to the m = +-1 (x) m = +-1
// qubit block; fringe contrast equals v exactly for this variant.
DensityMatrix werner_2x3_qubit_block(double v);

// v |Phi><Phi| + (1 - v) I/9 on atom (x) atom, |Phi> maximally entangled in
// the m = +-1 (x) m = +-1 subspace. Fidelity to |Phi> is 1/9 + 8/9 v.
DensityMatrix werner_atom_atom(double v);

PureState bell_state_atom_atom();  // the |Phi> used by werner_atom_atom

// <target|rho|target>, clipped of numerical imaginary residue.
double fidelity_to_target(const DensityMatrix& rho, const PureState& target);

Matrix photon_projector(const PhotonSetting& setting);        // 2x2, rank 1
Matrix dark_state_projector(const AtomReadoutSetting& s);     // 3x3, rank 1
Matrix bright_state_projector(const AtomReadoutSetting& s);   // 3x3, rank 1

// tr[rho (P_photon (x) P_atom)], P_atom = P_dark or I - P_dark.
double joint_probability(const DensityMatrix& rho, const PhotonSetting& ps,
                         const AtomReadoutSetting& as, AtomOutcome outcome);

struct ChshSettings {
    PhotonBasis photon_a = PhotonBasis::HV;
    PhotonBasis photon_a_prime = PhotonBasis::DA;
    AtomReadoutSetting atom_b{22.5, 0.0};
    AtomReadoutSetting atom_b_prime{67.5, 0.0};
};

// Correlator E = p(same) - p(different), pairing first-outcome with dark.
double chsh_correlator(const DensityMatrix& rho, PhotonBasis basis,
                       const AtomReadoutSetting& atom);

// S = |E(a,b) - E(a,b')| + |E(a',b) + E(a',b')|; the pairing maximizes S for
// werner_2x3(1) at the default settings, giving 2*sqrt(2).
double chsh_s(const DensityMatrix& rho, const ChshSettings& settings = {});

enum class Subsystem { photon, atom };

// Partial trace over a declared bipartite factorization (dim_a x dim_b).
DensityMatrix partial_trace(const DensityMatrix& rho, int dim_a, int dim_b,
                            bool keep_first);

// Convenience for the 2x3 photon (x) atom space.
DensityMatrix partial_trace(const DensityMatrix& rho, Subsystem keep);

}  // namespace qlink::qcore
