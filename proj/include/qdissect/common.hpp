#pragma once
// Shared arithmetic utilities: exact rationals, 2x2 integer matrices,
// number-theoretic helpers, hashing and a deterministic parallel loop.

#include <boost/multiprecision/cpp_int.hpp>

#include <atomic>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace qdissect {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// cpp_rational aborts when handed a negative denominator, so every rational
// built from a num/den pair funnels through here.
inline Rational make_rational(Int num, Int den) {
    if (den == 0) throw std::invalid_argument("make_rational: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    return Rational(std::move(num), std::move(den));
}

inline Int rat_num(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Int rat_den(const Rational& r) { return boost::multiprecision::denominator(r); }

// floor(a/b) for exact integers, correct for negative a.
inline Int floor_div(const Int& a, const Int& b) {
    Int q = a / b, r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

inline Int rfloor(const Rational& r) { return floor_div(rat_num(r), rat_den(r)); }
inline Int rceil(const Rational& r) { return -floor_div(-rat_num(r), rat_den(r)); }

// fractional part {x} = x - floor(x), always in [0,1).
inline Rational rfrac(const Rational& r) { return r - Rational(rfloor(r)); }

inline Rational rabs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline double rat_to_double(const Rational& r) { return r.convert_to<double>(); }

inline std::string rat_to_string(const Rational& r) {
    Int n = rat_num(r), d = rat_den(r);
    if (d == 1) return n.str();
    return n.str() + "/" + d.str();
}

inline Rational rat_from_string(std::string_view s) {
    auto bad = [&] { throw std::invalid_argument("rat_from_string: cannot parse '" + std::string(s) + "'"); };
    if (s.empty()) bad();
    auto slash = s.find('/');
    try {
        if (slash == std::string_view::npos) return Rational(Int(std::string(s)));
        Int n{std::string(s.substr(0, slash))};
        Int d{std::string(s.substr(slash + 1))};
        return make_rational(n, d);
    } catch (const std::invalid_argument&) { bad(); }
    return {};  // unreachable
}

// ---------------------------------------------------------------------------
// 2x2 integer matrices [[a,b],[c,d]], used for SL2(Z) throughout.
// ---------------------------------------------------------------------------
struct Matrix {
    long long a = 1, b = 0, c = 0, d = 1;

    friend Matrix operator*(const Matrix& x, const Matrix& y) {
        return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
                x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
    }
    long long det() const { return a * d - b * c; }
    // inverse of a determinant-one matrix
    Matrix inv() const {
        if (det() != 1) throw std::invalid_argument("Matrix::inv: determinant is not 1");
        return {d, -b, -c, a};
    }
    Matrix neg() const { return {-a, -b, -c, -d}; }
    bool operator==(const Matrix&) const = default;

    static Matrix identity() { return {1, 0, 0, 1}; }
    static Matrix T(long long k = 1) { return {1, k, 0, 1}; }   // translation
    static Matrix S() { return {0, -1, 1, 0}; }                 // inversion
};

// ---------------------------------------------------------------------------
// integer helpers
// ---------------------------------------------------------------------------
struct Egcd { long long g, x, y; };  // g = gcd(a,b) = a*x + b*y

inline Egcd egcd(long long a, long long b) {
    if (b == 0) return {a < 0 ? -a : a, a < 0 ? -1LL : 1LL, 0};
    Egcd e = egcd(b, a % b);
    return {e.g, e.y, e.x - (a / b) * e.y};
}

inline long long mod_inverse(long long a, long long m) {
    Egcd e = egcd(((a % m) + m) % m, m);
    if (e.g != 1) throw std::invalid_argument("mod_inverse: not coprime");
    return ((e.x % m) + m) % m;
}

inline long long mod_norm(long long a, long long m) { return ((a % m) + m) % m; }

// Jacobi symbol (m/n) for odd n > 0 (with (m/1) = 1).
inline int jacobi(long long m, long long n) {
    if (n <= 0 || n % 2 == 0) throw std::invalid_argument("jacobi: modulus must be positive odd");
    m = mod_norm(m, n);
    int sign = 1;
    while (m != 0) {
        while (m % 2 == 0) {
            m /= 2;
            long long r = n % 8;
            if (r == 3 || r == 5) sign = -sign;
        }
        std::swap(m, n);
        if (m % 4 == 3 && n % 4 == 3) sign = -sign;
        m %= n;
    }
    return n == 1 ? sign : 0;
}

// ---------------------------------------------------------------------------
// FNV-1a 64-bit, used for table digests and cache keys.
// ---------------------------------------------------------------------------
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 14695981039346656037ULL) {
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop: fn(i) is called exactly once per i in [0,n).
// Work items write to caller-owned slots, so the result is independent of
// scheduling.  fn must not throw.
// ---------------------------------------------------------------------------
template <class F>
inline void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
    for (unsigned t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace qdissect
