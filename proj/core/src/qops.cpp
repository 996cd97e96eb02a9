#include "qsl/qops.hpp"

#include "qsl/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qsl {

namespace {

constexpr double kFidelityClampWindow = 1e-10;

constexpr std::array<StateLabel, 8> kStateLabels = {
    StateLabel::PlusZ, StateLabel::MinusZ, StateLabel::PlusX, StateLabel::MinusX,
    StateLabel::PlusY, StateLabel::MinusY, StateLabel::PlusS, StateLabel::PlusR,
};

// Eigenvalues of a Hermitian 2x2 are tr/2 -/+ sqrt(((a-d)/2)^2 + |b|^2).
double hermitian_min_eigenvalue(const CMat2 &m)
{
    const double a = m.a00.real();
    const double d = m.a11.real();
    const Complex b = 0.5 * (m.a01 + std::conj(m.a10));
    const double half_gap = std::hypot(0.5 * (a - d), std::abs(b));
    return 0.5 * (a + d) - half_gap;
}

// Error-free sum: a + b == s + err exactly.
double two_sum(double a, double b, double &err)
{
    const double s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
    return s;
}

// a*d - |b|^2 with every rounding error carried along, so the determinant
// of a numerically pure state keeps its leading digits.
double hermitian_det(const CMat2 &m)
{
    const double a = m.a00.real();
    const double d = m.a11.real();
    const Complex b = 0.5 * (m.a01 + std::conj(m.a10));
    const double p = a * d;
    const double q1 = b.real() * b.real();
    const double q2 = b.imag() * b.imag();
    double e1 = 0.0, e2 = 0.0;
    const double s = two_sum(two_sum(p, -q1, e1), -q2, e2);
    const double products = std::fma(a, d, -p) - std::fma(b.real(), b.real(), -q1) - std::fma(b.imag(), b.imag(), -q2);
    return s + (e1 + e2 + products);
}

} // namespace

double CMat2::max_abs() const
{
    return std::max({std::abs(a00), std::abs(a01), std::abs(a10), std::abs(a11)});
}

bool CMat2::is_finite() const
{
    for (const Complex &c : {a00, a01, a10, a11}) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            return false;
        }
    }
    return true;
}

CMat2 &CMat2::operator+=(const CMat2 &o)
{
    a00 += o.a00;
    a01 += o.a01;
    a10 += o.a10;
    a11 += o.a11;
    return *this;
}

CMat2 &CMat2::operator-=(const CMat2 &o)
{
    a00 -= o.a00;
    a01 -= o.a01;
    a10 -= o.a10;
    a11 -= o.a11;
    return *this;
}

CMat2 &CMat2::operator*=(Complex s)
{
    a00 *= s;
    a01 *= s;
    a10 *= s;
    a11 *= s;
    return *this;
}

CMat2 operator+(CMat2 a, const CMat2 &b) { return a += b; }
CMat2 operator-(CMat2 a, const CMat2 &b) { return a -= b; }
CMat2 operator-(const CMat2 &a) { return {-a.a00, -a.a01, -a.a10, -a.a11}; }
CMat2 operator*(Complex s, CMat2 a) { return a *= s; }
CMat2 operator*(CMat2 a, Complex s) { return a *= s; }

CMat2 operator*(const CMat2 &a, const CMat2 &b)
{
    return {
        a.a00 * b.a00 + a.a01 * b.a10,
        a.a00 * b.a01 + a.a01 * b.a11,
        a.a10 * b.a00 + a.a11 * b.a10,
        a.a10 * b.a01 + a.a11 * b.a11,
    };
}

CMat2 commutator(const CMat2 &a, const CMat2 &b) { return a * b - b * a; }
CMat2 anticommutator(const CMat2 &a, const CMat2 &b) { return a * b + b * a; }

CMat2 pauli(Pauli which)
{
    using namespace std::complex_literals;
    switch (which) {
    case Pauli::Identity: return CMat2::identity();
    case Pauli::X: return {0.0, 1.0, 1.0, 0.0};
    case Pauli::Y: return {0.0, -1i, 1i, 0.0};
    case Pauli::Z: return CMat2::diag(1.0, -1.0);
    case Pauli::Plus: return {0.0, 2.0, 0.0, 0.0};
    case Pauli::Minus: return {0.0, 0.0, 2.0, 0.0};
    }
    throw ValidationError("pauli: invalid enumerator");
}

CMat2 pauli(std::string_view label)
{
    if (label == "x" || label == "X") return pauli(Pauli::X);
    if (label == "y" || label == "Y") return pauli(Pauli::Y);
    if (label == "z" || label == "Z") return pauli(Pauli::Z);
    if (label == "+") return pauli(Pauli::Plus);
    if (label == "-" || label == "−") return pauli(Pauli::Minus);
    if (label == "i" || label == "I" || label == "identity") return pauli(Pauli::Identity);
    throw ValidationError("unknown Pauli label '" + std::string(label) +
                          "' (expected x, y, z, +, -, identity)");
}

double Ket::norm() const { return std::sqrt(std::norm(c0) + std::norm(c1)); }

std::span<const StateLabel> all_state_labels() { return kStateLabels; }

std::string_view to_string(StateLabel label)
{
    switch (label) {
    case StateLabel::PlusZ: return "+Z";
    case StateLabel::MinusZ: return "-Z";
    case StateLabel::PlusX: return "+X";
    case StateLabel::MinusX: return "-X";
    case StateLabel::PlusY: return "+Y";
    case StateLabel::MinusY: return "-Y";
    case StateLabel::PlusS: return "+S";
    case StateLabel::PlusR: return "+R";
    }
    return "?";
}

std::string valid_state_labels()
{
    std::string out;
    for (StateLabel l : kStateLabels) {
        if (!out.empty()) out += ", ";
        out += to_string(l);
    }
    return out;
}

StateLabel parse_state_label(std::string_view text)
{
    std::string normalized(text);
    constexpr std::string_view kUnicodeMinus = "−";
    if (normalized.starts_with(kUnicodeMinus)) {
        normalized.replace(0, kUnicodeMinus.size(), "-");
    }
    for (StateLabel l : kStateLabels) {
        if (normalized == to_string(l)) return l;
    }
    throw ValidationError("unknown state label '" + std::string(text) +
                          "'; valid labels: " + valid_state_labels());
}

NamedState named_state(StateLabel label)
{
    using namespace std::complex_literals;
    const double h = std::numbers::sqrt2 / 2.0;
    const double c = std::cos(std::numbers::pi / 8.0);
    const double s = std::sin(std::numbers::pi / 8.0);
    switch (label) {
    case StateLabel::PlusZ: return {label, {1.0, 0.0}};
    case StateLabel::MinusZ: return {label, {0.0, 1.0}};
    case StateLabel::PlusX: return {label, {h, h}};
    case StateLabel::MinusX: return {label, {h, -h}};
    case StateLabel::PlusY: return {label, {h, 1i * h}};
    case StateLabel::MinusY: return {label, {h, -1i * h}};
    case StateLabel::PlusS: return {label, {c, s}};
    case StateLabel::PlusR: return {label, {c, 1i * s}};
    }
    throw ValidationError("named_state: invalid enumerator");
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

DensityMatrix::DensityMatrix(const CMat2 &m) : m_(m)
{
    if (!m.is_finite()) {
        throw ValidationError("density matrix has non-finite entries");
    }
    if (hermiticity_deviation() >= kTolerance) {
        std::ostringstream os;
        os << "density matrix is not Hermitian (deviation " << hermiticity_deviation() << ")";
        throw ValidationError(os.str());
    }
    if (trace_deviation() >= kTolerance) {
        std::ostringstream os;
        os << "density matrix trace deviates from 1 by " << trace_deviation();
        throw ValidationError(os.str());
    }
}

DensityMatrix DensityMatrix::unchecked(const CMat2 &m) { return DensityMatrix(m, NoCheck{}); }

DensityMatrix DensityMatrix::from_bloch(const BlochVector &r)
{
    using namespace std::complex_literals;
    return DensityMatrix(CMat2{
        0.5 * (1.0 + r.z),
        0.5 * (r.x - 1i * r.y),
        0.5 * (r.x + 1i * r.y),
        0.5 * (1.0 - r.z),
    });
}

DensityMatrix DensityMatrix::maximally_mixed() { return DensityMatrix(CMat2::diag(0.5, 0.5)); }

Complex DensityMatrix::operator()(int row, int col) const
{
    if (row == 0) return col == 0 ? m_.a00 : m_.a01;
    return col == 0 ? m_.a10 : m_.a11;
}

double DensityMatrix::trace_deviation() const { return std::abs(m_.trace() - 1.0); }

double DensityMatrix::hermiticity_deviation() const { return (m_ - m_.adjoint()).max_abs(); }

double DensityMatrix::min_eigenvalue() const { return hermitian_min_eigenvalue(m_); }

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

DensityMatrix density_from_state(const Ket &psi)
{
    if (std::abs(psi.norm() - 1.0) >= DensityMatrix::kTolerance) {
        std::ostringstream os;
        os << "state vector is not normalized (norm " << psi.norm() << ")";
        throw ValidationError(os.str());
    }
    // |psi><psi| with the diagonal forced real so the result is exactly Hermitian.
    const Complex off = psi.c0 * std::conj(psi.c1);
    return DensityMatrix(CMat2{std::norm(psi.c0), off, std::conj(off), std::norm(psi.c1)});
}

DensityMatrix density_from_state(StateLabel label) { return density_from_state(named_state(label).ket); }

BlochVector bloch_vector(const DensityMatrix &rho)
{
    const CMat2 &m = rho.matrix();
    // Tr(rho sx) = a01 + a10, Tr(rho sy) = i(a01 - a10), Tr(rho sz) = a00 - a11
    return {
        (m.a01 + m.a10).real(),
        (Complex(0.0, 1.0) * (m.a01 - m.a10)).real(),
        (m.a00 - m.a11).real(),
    };
}

double uhlmann_fidelity(const DensityMatrix &target, const DensityMatrix &final_state)
{
    for (const auto &[rho, name] : {std::pair{&target, "target"}, std::pair{&final_state, "final"}}) {
        const double lambda = rho->min_eigenvalue();
        if (!(lambda >= -DensityMatrix::kPositivityEps)) {
            std::ostringstream os;
            os << "uhlmann_fidelity: " << name << " density matrix has eigenvalue " << lambda
               << " below -" << DensityMatrix::kPositivityEps;
            throw NumericalError(os.str());
        }
    }
    const double overlap = (target.matrix() * final_state.matrix()).trace().real();
    const double det_product = hermitian_det(target.matrix()) * hermitian_det(final_state.matrix());
    double f = overlap + 2.0 * std::sqrt(std::max(det_product, 0.0));
    if (f > 1.0 && f - 1.0 < kFidelityClampWindow) f = 1.0;
    if (f < 0.0 && -f < kFidelityClampWindow) f = 0.0;
    return f;
}

} // namespace qsl
