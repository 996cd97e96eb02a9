#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>

namespace qsl {

using Complex = std::complex<double>;

/// Dense complex 2x2 matrix, row-major entries.
struct CMat2 {
    Complex a00{}, a01{}, a10{}, a11{};

    static constexpr CMat2 zero() { return {}; }
    static constexpr CMat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static constexpr CMat2 diag(Complex d0, Complex d1) { return {d0, 0.0, 0.0, d1}; }

    constexpr CMat2 adjoint() const
    {
        return {std::conj(a00), std::conj(a10), std::conj(a01), std::conj(a11)};
    }
    constexpr Complex trace() const { return a00 + a11; }
    constexpr Complex det() const { return a00 * a11 - a01 * a10; }

    /// Largest entry magnitude.
    double max_abs() const;
    bool is_finite() const;

    CMat2 &operator+=(const CMat2 &o);
    CMat2 &operator-=(const CMat2 &o);
    CMat2 &operator*=(Complex s);

    friend bool operator==(const CMat2 &, const CMat2 &) = default;
};

CMat2 operator+(CMat2 a, const CMat2 &b);
CMat2 operator-(CMat2 a, const CMat2 &b);
CMat2 operator-(const CMat2 &a);
CMat2 operator*(const CMat2 &a, const CMat2 &b);
CMat2 operator*(Complex s, CMat2 a);
CMat2 operator*(CMat2 a, Complex s);

CMat2 commutator(const CMat2 &a, const CMat2 &b);
CMat2 anticommutator(const CMat2 &a, const CMat2 &b);

enum class Pauli { Identity, X, Y, Z, Plus, Minus };

/// Pauli matrices. The ladder operators are sigma_x +/- i sigma_y with no
/// factor of one half, so their nonzero entry is 2.
CMat2 pauli(Pauli which);
/// Accepts "x", "y", "z", "+", "-", "i"/"identity". Throws ValidationError
/// for anything else.
CMat2 pauli(std::string_view label);

struct Ket {
    Complex c0{}, c1{};
    double norm() const;
};

enum class StateLabel { PlusZ, MinusZ, PlusX, MinusX, PlusY, MinusY, PlusS, PlusR };

struct NamedState {
    StateLabel label;
    Ket ket;
};

std::span<const StateLabel> all_state_labels();
std::string_view to_string(StateLabel label);
/// Parses "+Z", "-X", ... (a U+2212 minus sign is accepted too). Unknown
/// labels raise ValidationError listing the valid ones.
StateLabel parse_state_label(std::string_view text);
NamedState named_state(StateLabel label);
/// Comma separated list of every valid label, for error messages.
std::string valid_state_labels();

struct BlochVector {
    double x = 0.0, y = 0.0, z = 0.0;
    double norm() const;
};

/// Hermitian, unit-trace 2x2 matrix. Positivity is monitored through
/// min_eigenvalue() but not enforced on construction.
class DensityMatrix {
public:
    static constexpr double kTolerance = 1e-12;
    static constexpr double kPositivityEps = 1e-9;

    /// Validates hermiticity and unit trace to kTolerance.
    explicit DensityMatrix(const CMat2 &m);

    /// Skips validation; for states produced by the integrator, which
    /// tracks its own drift diagnostics.
    static DensityMatrix unchecked(const CMat2 &m);
    static DensityMatrix from_bloch(const BlochVector &r);
    static DensityMatrix maximally_mixed();

    const CMat2 &matrix() const { return m_; }
    Complex operator()(int row, int col) const;

    double trace_deviation() const;
    double hermiticity_deviation() const;
    double min_eigenvalue() const;
    double purity() const;

private:
    struct NoCheck {};
    DensityMatrix(const CMat2 &m, NoCheck) : m_(m) {}

    CMat2 m_;
};

DensityMatrix density_from_state(const Ket &psi);
DensityMatrix density_from_state(StateLabel label);

BlochVector bloch_vector(const DensityMatrix &rho);

/// Uhlmann fidelity [Tr sqrt(sqrt(target) final sqrt(target))]^2 via the 2x2
/// closed form Tr(target final) + 2 sqrt(det target * det final).
/// Throws NumericalError when either argument has an eigenvalue below
/// -DensityMatrix::kPositivityEps.
double uhlmann_fidelity(const DensityMatrix &target, const DensityMatrix &final_state);

} // namespace qsl
