#pragma once
// Exact arithmetic in cyclotomic fields Q(zeta_n), represented in the power
// basis 1, z, ..., z^{phi(n)-1} with reduction modulo the n-th cyclotomic
// polynomial.  Conductors in play are small (n <= 28 for the verifier, plus
// whatever a CLI user asks for), so dense vectors of exact rationals are the
// right representation.

#include "qdissect/common.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>

namespace qdissect {

namespace detail {

inline void poly_trim(std::vector<Int>& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

// Exact division of integer polynomials (the divisor is monic in every use
// here, so the quotient stays integral).  Throws if the division leaves a
// remainder.
inline std::vector<Int> poly_div_exact(std::vector<Int> num, std::vector<Int> den) {
    poly_trim(num);
    poly_trim(den);
    if (den.empty()) throw std::invalid_argument("poly_div_exact: division by zero polynomial");
    if (num.size() < den.size()) throw std::invalid_argument("poly_div_exact: inexact division");
    std::vector<Int> quot(num.size() - den.size() + 1);
    for (std::size_t i = quot.size(); i-- > 0;) {
        Int q = num[i + den.size() - 1] / den.back();
        if (q * den.back() != num[i + den.size() - 1])
            throw std::invalid_argument("poly_div_exact: inexact division");
        quot[i] = q;
        for (std::size_t j = 0; j < den.size(); ++j) num[i + j] -= q * den[j];
    }
    for (const Int& r : num)
        if (r != 0) throw std::invalid_argument("poly_div_exact: nonzero remainder");
    return quot;
}

}  // namespace detail

/*
 * n-th cyclotomic polynomial via the recursion
 *
 *   x^n - 1 = prod_{d | n} Phi_d(x)   =>   Phi_n = (x^n - 1) / prod_{d|n, d<n} Phi_d,
 *
 * carried out in exact integer arithmetic.  Returned dense with index = degree.
 */
inline std::vector<Int> cyclotomic_poly(int n) {
    if (n <= 0) throw std::invalid_argument("cyclotomic_poly: n must be positive");
    std::vector<Int> p(n + 1);
    p[0] = -1;
    p[n] = 1;
    for (int d = 1; d < n; ++d)
        if (n % d == 0) p = detail::poly_div_exact(std::move(p), cyclotomic_poly(d));
    return p;
}

inline int euler_phi(int n) {
    int result = n;
    for (int p = 2; p * p <= n; ++p)
        if (n % p == 0) {
            while (n % p == 0) n /= p;
            result -= result / p;
        }
    if (n > 1) result -= result / n;
    return result;
}

class CycloRing;
using RingPtr = std::shared_ptr<const CycloRing>;

// Immutable ring descriptor: conductor, Phi_n, and reduction tables.
class CycloRing {
  public:
    explicit CycloRing(int n) : n_(n), phi_(cyclotomic_poly(n)) {
        deg_ = static_cast<int>(phi_.size()) - 1;
        if (deg_ != euler_phi(n)) throw std::logic_error("CycloRing: degree mismatch");
        // x^{deg+i} mod Phi for i in [0, deg-1): enough to fold one product.
        std::vector<Rational> cur(deg_);
        for (int k = 0; k < deg_; ++k) cur[k] = -Rational(phi_[k]);  // x^deg mod Phi
        for (int i = 0; i + 2 <= deg_; ++i) {
            xpow_.push_back(cur);
            // multiply by x and reduce
            Rational top = cur[deg_ - 1];
            for (int k = deg_ - 1; k > 0; --k) cur[k] = cur[k - 1];
            cur[0] = 0;
            if (top != 0)
                for (int k = 0; k < deg_; ++k) cur[k] -= top * Rational(phi_[k]);
        }
        // zeta^t in the power basis for t in [0, n)
        std::vector<Rational> z(deg_);
        if (deg_ > 0) z[0] = 1;
        for (int t = 0; t < n_; ++t) {
            zpow_.push_back(z);
            Rational top = z[deg_ - 1];
            for (int k = deg_ - 1; k > 0; --k) z[k] = z[k - 1];
            z[0] = 0;
            if (top != 0)
                for (int k = 0; k < deg_; ++k) z[k] -= top * Rational(phi_[k]);
        }
    }

    int conductor() const { return n_; }
    int degree() const { return deg_; }
    const std::vector<Int>& phi() const { return phi_; }

    // x^j mod Phi_n for deg <= j <= 2 deg - 2
    const std::vector<Rational>& xpow(int j) const {
        if (j < deg_ || j > 2 * deg_ - 2) throw std::out_of_range("CycloRing::xpow");
        return xpow_[j - deg_];
    }
    // zeta^t in the power basis, any integer t
    const std::vector<Rational>& zeta_pow(long long t) const {
        return zpow_[static_cast<std::size_t>(mod_norm(t, n_))];
    }

  private:
    int n_, deg_;
    std::vector<Int> phi_;
    std::vector<std::vector<Rational>> xpow_;
    std::vector<std::vector<Rational>> zpow_;
};

// Shared, cached ring handles; rings are immutable so sharing is safe.
inline RingPtr cyclo_ring(int n) {
    static std::mutex mu;
    static std::map<int, RingPtr> cache;
    std::lock_guard<std::mutex> lock(mu);
    RingPtr& slot = cache[n];
    if (!slot) slot = std::make_shared<CycloRing>(n);
    return slot;
}

// An element of Q(zeta_n): phi(n) exact rational coordinates, always reduced.
class CycloNumber {
  public:
    CycloNumber() = default;  // empty shell; assign before use
    explicit CycloNumber(RingPtr ring) : ring_(std::move(ring)), c_(ring_->degree()) {}
    CycloNumber(RingPtr ring, Rational constant) : CycloNumber(std::move(ring)) {
        if (!c_.empty()) c_[0] = std::move(constant);
    }

    static CycloNumber from_coeffs(RingPtr ring, std::vector<Rational> coeffs) {
        if (static_cast<int>(coeffs.size()) > ring->degree())
            throw std::invalid_argument("CycloNumber: too many coefficients");
        CycloNumber x(std::move(ring));
        for (std::size_t i = 0; i < coeffs.size(); ++i) x.c_[i] = std::move(coeffs[i]);
        return x;
    }

    static CycloNumber zeta(RingPtr ring, long long k = 1) {
        CycloNumber x(ring);
        x.c_ = ring->zeta_pow(k);
        return x;
    }

    const RingPtr& ring() const { return ring_; }
    const std::vector<Rational>& coeffs() const { return c_; }

    bool is_zero() const {
        for (const Rational& v : c_)
            if (v != 0) return false;
        return true;
    }
    bool is_rational() const {
        for (std::size_t i = 1; i < c_.size(); ++i)
            if (c_[i] != 0) return false;
        return true;
    }
    Rational to_rational() const {
        if (!is_rational()) throw std::domain_error("CycloNumber::to_rational: not rational");
        return c_.empty() ? Rational(0) : c_[0];
    }

    bool operator==(const CycloNumber& o) const {
        check_same_ring(o);
        return c_ == o.c_;
    }

    CycloNumber operator-() const {
        CycloNumber r(ring_);
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = -c_[i];
        return r;
    }
    friend CycloNumber operator+(const CycloNumber& a, const CycloNumber& b) {
        a.check_same_ring(b);
        CycloNumber r(a.ring_);
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = a.c_[i] + b.c_[i];
        return r;
    }
    friend CycloNumber operator-(const CycloNumber& a, const CycloNumber& b) {
        a.check_same_ring(b);
        CycloNumber r(a.ring_);
        for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = a.c_[i] - b.c_[i];
        return r;
    }
    CycloNumber& operator+=(const CycloNumber& o) {
        check_same_ring(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    CycloNumber& operator-=(const CycloNumber& o) {
        check_same_ring(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }

    /*
     * Product: full convolution of the coordinate vectors followed by one
     * pass folding x^j (j >= deg) down with the precomputed tables
     *
     *   x^j mod Phi_n,  deg <= j <= 2 deg - 2.
     */
    friend CycloNumber operator*(const CycloNumber& a, const CycloNumber& b) {
        a.check_same_ring(b);
        const int deg = a.ring_->degree();
        std::vector<Rational> conv(2 * deg - 1);
        for (int i = 0; i < deg; ++i) {
            if (a.c_[i] == 0) continue;
            for (int j = 0; j < deg; ++j)
                if (b.c_[j] != 0) conv[i + j] += a.c_[i] * b.c_[j];
        }
        CycloNumber r(a.ring_);
        for (int k = 0; k < deg; ++k) r.c_[k] = std::move(conv[k]);
        for (int j = deg; j <= 2 * deg - 2; ++j) {
            if (conv[j] == 0) continue;
            const std::vector<Rational>& red = a.ring_->xpow(j);
            for (int k = 0; k < deg; ++k)
                if (red[k] != 0) r.c_[k] += conv[j] * red[k];
        }
        return r;
    }
    CycloNumber& operator*=(const CycloNumber& o) { return *this = *this * o; }

    CycloNumber operator*(const Rational& s) const {
        CycloNumber r(ring_);
        if (s == 0) return r;
        for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = c_[i] * s;
        return r;
    }
    CycloNumber& operator*=(const Rational& s) { return *this = *this * s; }

    /*
     * Inverse by the extended Euclidean algorithm in Q[x]: since Phi_n is
     * irreducible and a != 0, gcd(a, Phi_n) = 1 = s a + t Phi_n, so s is the
     * inverse modulo Phi_n.
     */
    CycloNumber inv() const {
        if (is_zero()) throw std::domain_error("CycloNumber::inv: zero element");
        using Poly = std::vector<Rational>;
        auto trim = [](Poly& p) {
            while (!p.empty() && p.back() == 0) p.pop_back();
        };
        Poly r0(ring_->phi().size());
        for (std::size_t i = 0; i < r0.size(); ++i) r0[i] = Rational(ring_->phi()[i]);
        Poly r1(c_.begin(), c_.end());
        trim(r1);
        Poly s0{Rational(0)}, s1{Rational(1)};
        trim(s0);
        while (true) {
            // divide r0 by r1: r0 = q r1 + r
            Poly rem = r0, q(rem.size() > r1.size() ? rem.size() - r1.size() + 1 : 1);
            while (rem.size() >= r1.size() && !rem.empty()) {
                Rational f = rem.back() / r1.back();
                std::size_t shift = rem.size() - r1.size();
                q[shift] = f;
                for (std::size_t i = 0; i < r1.size(); ++i) rem[shift + i] -= f * r1[i];
                trim(rem);
                if (rem.size() > shift + r1.size()) throw std::logic_error("inv: division stuck");
            }
            // s_next = s0 - q s1
            Poly snext = s0;
            snext.resize(std::max(snext.size(), q.size() + s1.size()), Rational(0));
            for (std::size_t i = 0; i < q.size(); ++i) {
                if (q[i] == 0) continue;
                for (std::size_t j = 0; j < s1.size(); ++j) snext[i + j] -= q[i] * s1[j];
            }
            trim(snext);
            if (rem.empty()) {
                // r1 is the gcd, a nonzero constant (Phi_n irreducible)
                if (r1.size() != 1) throw std::logic_error("CycloNumber::inv: nonconstant gcd");
                CycloNumber out(ring_);
                for (std::size_t i = 0; i < s1.size() && i < out.c_.size(); ++i)
                    out.c_[i] = s1[i] / r1[0];
                return out;
            }
            r0 = std::move(r1);
            r1 = std::move(rem);
            s0 = std::move(s1);
            s1 = std::move(snext);
        }
    }

    friend CycloNumber operator/(const CycloNumber& a, const CycloNumber& b) { return a * b.inv(); }

    // Galois action zeta -> zeta^k, gcd(k, n) = 1.
    CycloNumber galois(long long k) const {
        const int n = ring_->conductor();
        if (std::gcd(mod_norm(k, n), static_cast<long long>(n)) != 1)
            throw std::invalid_argument("CycloNumber::galois: k not coprime to conductor");
        CycloNumber r(ring_);
        for (std::size_t j = 0; j < c_.size(); ++j) {
            if (c_[j] == 0) continue;
            const std::vector<Rational>& img = ring_->zeta_pow(static_cast<long long>(j) * k);
            for (std::size_t t = 0; t < r.c_.size(); ++t)
                if (img[t] != 0) r.c_[t] += c_[j] * img[t];
        }
        return r;
    }

    // Does the element lie in the subfield Q(zeta_m), m | n?  True iff it is
    // fixed by every sigma_k with k = 1 mod m (the subgroup of Gal(Q(zeta_n)/Q)
    // whose fixed field is exactly Q(zeta_m)).
    bool in_subfield(int m) const {
        const int n = ring_->conductor();
        if (m <= 0 || n % m != 0) throw std::invalid_argument("in_subfield: m must divide conductor");
        for (int k = 1; k < n; ++k)
            if (std::gcd(k, n) == 1 && k % m == 1 % m && !(galois(k) == *this)) return false;
        return true;
    }

    // Conductor extension Q(zeta_n) -> Q(zeta_M) via zeta_n -> zeta_M^{M/n}.
    CycloNumber embed_into(const RingPtr& big) const {
        const int n = ring_->conductor(), M = big->conductor();
        if (M % n != 0) throw std::invalid_argument("embed_into: target conductor not a multiple");
        const long long step = M / n;
        CycloNumber r(big);
        for (std::size_t j = 0; j < c_.size(); ++j) {
            if (c_[j] == 0) continue;
            const std::vector<Rational>& img = big->zeta_pow(static_cast<long long>(j) * step);
            for (std::size_t t = 0; t < r.c_.size(); ++t)
                if (img[t] != 0) r.c_[t] += c_[j] * img[t];
        }
        return r;
    }

    // Exact restriction to Q(zeta_m) (m | n): solve for coordinates in the
    // basis zeta_m^j = zeta_n^{(n/m) j}.  Throws if the element is not in the
    // subfield.
    CycloNumber restrict_to(const RingPtr& small) const;

    // Numeric embedding at zeta_n -> exp(2 pi i j / n), gcd(j,n)=1.
    std::complex<double> embed(long long j = 1) const {
        const int n = ring_->conductor();
        std::complex<double> acc{0.0, 0.0};
        constexpr double two_pi = 6.283185307179586476925;
        for (std::size_t t = 0; t < c_.size(); ++t) {
            if (c_[t] == 0) continue;
            double arg = two_pi * static_cast<double>(mod_norm(static_cast<long long>(t) * j, n)) / n;
            acc += rat_to_double(c_[t]) * std::complex<double>(std::cos(arg), std::sin(arg));
        }
        return acc;
    }

    // Deterministic display, e.g. "1 - 1/2*z^3" with z a primitive n-th root.
    std::string pretty() const {
        std::ostringstream out;
        bool first = true;
        for (std::size_t t = 0; t < c_.size(); ++t) {
            if (c_[t] == 0) continue;
            Rational v = c_[t];
            bool neg = v < 0;
            if (neg) v = -v;
            out << (first ? (neg ? "-" : "") : (neg ? " - " : " + "));
            first = false;
            std::string mag = rat_to_string(v);
            if (t == 0) out << mag;
            else {
                if (mag != "1") out << mag << "*";
                out << "z";
                if (t > 1) out << "^" << t;
            }
        }
        if (first) out << "0";
        return out.str();
    }

  private:
    void check_same_ring(const CycloNumber& o) const {
        if (!ring_ || !o.ring_ || ring_->conductor() != o.ring_->conductor())
            throw std::invalid_argument("CycloNumber: ring mismatch");
    }

    RingPtr ring_;
    std::vector<Rational> c_;
};

inline CycloNumber operator*(const Rational& s, const CycloNumber& x) { return x * s; }

// ---------------------------------------------------------------------------
// Exact dense linear solve A y = b over any field type K (used for subfield
// restriction and for projecting rank differences onto a root-of-unity basis).
// A is row-major (rows x cols), possibly overdetermined; returns nullopt when
// the system is inconsistent.  Free variables, if any, are set to zero.
// ---------------------------------------------------------------------------
template <class K>
inline std::optional<std::vector<K>> solve_linear(std::vector<std::vector<K>> A, std::vector<K> b,
                                                  const K& zero) {
    const std::size_t rows = A.size();
    const std::size_t cols = rows ? A[0].size() : 0;
    std::vector<std::size_t> pivot_of_col(cols, SIZE_MAX);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t piv = SIZE_MAX;
        for (std::size_t r = rank; r < rows; ++r)
            if (!(A[r][col] == zero)) { piv = r; break; }
        if (piv == SIZE_MAX) continue;
        std::swap(A[piv], A[rank]);
        std::swap(b[piv], b[rank]);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == rank || A[r][col] == zero) continue;
            K f = A[r][col] / A[rank][col];
            for (std::size_t cc = col; cc < cols; ++cc) A[r][cc] -= f * A[rank][cc];
            b[r] -= f * b[rank];
        }
        pivot_of_col[col] = rank;
        ++rank;
    }
    for (std::size_t r = rank; r < rows; ++r)
        if (!(b[r] == zero)) return std::nullopt;
    std::vector<K> y(cols, zero);
    for (std::size_t col = 0; col < cols; ++col)
        if (pivot_of_col[col] != SIZE_MAX) y[col] = b[pivot_of_col[col]] / A[pivot_of_col[col]][col];
    return y;
}

inline CycloNumber CycloNumber::restrict_to(const RingPtr& small) const {
    const int n = ring_->conductor(), m = small->conductor();
    if (n % m != 0) throw std::invalid_argument("restrict_to: conductor must divide");
    const int degm = small->degree(), degn = ring_->degree();
    std::vector<std::vector<Rational>> A(degn, std::vector<Rational>(degm));
    for (int j = 0; j < degm; ++j) {
        const std::vector<Rational>& col = ring_->zeta_pow(static_cast<long long>(j) * (n / m));
        for (int r = 0; r < degn; ++r) A[r][j] = col[r];
    }
    std::vector<Rational> rhs(c_.begin(), c_.end());
    auto sol = solve_linear<Rational>(std::move(A), std::move(rhs), Rational(0));
    if (!sol) throw std::domain_error("restrict_to: element not in subfield");
    return CycloNumber::from_coeffs(small, std::move(*sol));
}

}  // namespace qdissect
