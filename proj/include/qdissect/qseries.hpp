#pragma once
// Truncated formal q-series with exponents on a fixed grid (1/D)Z and exact
// cyclotomic coefficients, plus builders for the infinite products in play
// (Pochhammer products, eta, Klein forms, theta-like triple products) and
// double-precision evaluation for transformation spot checks.
//
// Truncation discipline: a series knows its coefficients for all exponents
// e < T and nothing beyond; every operation propagates T pessimistically
// (min rule), so downstream vanishing claims are sound.

#include "qdissect/exactmath.hpp"

#include <json.hpp>

#include <algorithm>
#include <complex>
#include <map>

namespace qdissect {

struct EvalResult {
    std::complex<double> value;
    double tail_bound = 0.0;
};

class QSeries {
  public:
    QSeries() = default;

    static QSeries zero(RingPtr ring, int D, Rational T) {
        QSeries s;
        s.ring_ = std::move(ring);
        s.D_ = D;
        s.T_ = std::move(T);
        return s;
    }

    // coeff * q^e, exponent e on the grid (1/D)Z
    static QSeries monomial(RingPtr ring, int D, CycloNumber coeff, const Rational& e, Rational T) {
        QSeries s = zero(std::move(ring), D, std::move(T));
        Rational g = e * D;
        if (rat_den(g) != 1) throw std::invalid_argument("QSeries::monomial: exponent off grid");
        s.lead_ = rat_num(g).convert_to<long long>();
        s.c_.push_back(std::move(coeff));
        s.normalize();
        return s;
    }

    static QSeries constant(RingPtr ring, int D, CycloNumber v, Rational T) {
        return monomial(std::move(ring), D, std::move(v), Rational(0), std::move(T));
    }
    static QSeries one(const RingPtr& ring, int D, Rational T) {
        return constant(ring, D, CycloNumber(ring, 1), std::move(T));
    }

    const RingPtr& ring() const { return ring_; }
    int grid() const { return D_; }
    const Rational& truncation() const { return T_; }
    bool is_zero_series() const { return c_.empty(); }
    long long lead_units() const { return lead_; }
    long long step_units() const { return step_; }
    const std::vector<CycloNumber>& stored_coeffs() const { return c_; }

    Rational lead_exponent() const {
        if (c_.empty()) throw std::domain_error("QSeries::lead_exponent: zero series");
        return make_rational(lead_, D_);
    }
    // order as far as this series knows it: lead exponent, or T for the zero series
    Rational order_known() const { return c_.empty() ? T_ : make_rational(lead_, D_); }

    // exact coefficient of q^e; throws when e is beyond the truncation horizon
    CycloNumber coeff(const Rational& e) const {
        if (e >= T_) throw std::domain_error("QSeries::coeff: exponent beyond truncation");
        Rational g = e * D_;
        if (rat_den(g) != 1) return CycloNumber(ring_);
        Int u = rat_num(g) - lead_;
        if (c_.empty() || u < 0 || u % step_ != 0) return CycloNumber(ring_);
        Int idx = u / step_;
        if (idx >= static_cast<long long>(c_.size())) return CycloNumber(ring_);
        return c_[idx.convert_to<std::size_t>()];
    }
    CycloNumber coeff_int(long long n) const { return coeff(Rational(n)); }

    QSeries operator-() const {
        QSeries r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }

    friend QSeries operator+(const QSeries& a, const QSeries& b) {
        a.check_compatible(b);
        Rational T = std::min(a.T_, b.T_);
        if (a.c_.empty() && b.c_.empty()) return zero(a.ring_, a.D_, T);
        if (a.c_.empty()) { QSeries r = b; r.T_ = T; r.normalize(); return r; }
        if (b.c_.empty()) { QSeries r = a; r.T_ = T; r.normalize(); return r; }
        long long lead = std::min(a.lead_, b.lead_);
        long long g = std::gcd(std::gcd(a.step_, b.step_), a.lead_ >= b.lead_ ? a.lead_ - b.lead_ : b.lead_ - a.lead_);
        long long hi = std::max(a.lead_ + a.step_ * (static_cast<long long>(a.c_.size()) - 1),
                                b.lead_ + b.step_ * (static_cast<long long>(b.c_.size()) - 1));
        QSeries r = zero(a.ring_, a.D_, T);
        r.lead_ = lead;
        r.step_ = g;
        r.c_.assign(static_cast<std::size_t>((hi - lead) / g) + 1, CycloNumber(a.ring_));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            r.c_[static_cast<std::size_t>((a.lead_ + a.step_ * static_cast<long long>(i) - lead) / g)] += a.c_[i];
        for (std::size_t i = 0; i < b.c_.size(); ++i)
            r.c_[static_cast<std::size_t>((b.lead_ + b.step_ * static_cast<long long>(i) - lead) / g)] += b.c_[i];
        r.normalize();
        return r;
    }
    friend QSeries operator-(const QSeries& a, const QSeries& b) { return a + (-b); }

    /*
     * Product with the pessimistic truncation rule
     *
     *   T = min(T_a + ord(b), T_b + ord(a)),
     *
     * where ord is the leading exponent (or T itself for a zero series): a
     * product coefficient below that horizon only involves known coefficients
     * of both factors.
     */
    friend QSeries operator*(const QSeries& a, const QSeries& b) {
        a.check_compatible(b);
        Rational T = std::min(a.T_ + b.order_known(), b.T_ + a.order_known());
        if (a.c_.empty() || b.c_.empty()) return zero(a.ring_, a.D_, T);
        long long lead = a.lead_ + b.lead_;
        long long g = std::gcd(a.step_, b.step_);
        Rational span = T * D_of(a) - Rational(lead);
        if (span <= 0) return zero(a.ring_, a.D_, T);
        long long len = rceil(span / g).convert_to<long long>();
        QSeries r = zero(a.ring_, a.D_, T);
        r.lead_ = lead;
        r.step_ = g;
        r.c_.assign(static_cast<std::size_t>(len), CycloNumber(a.ring_));
        for (std::size_t i = 0; i < a.c_.size(); ++i) {
            if (a.c_[i].is_zero()) continue;
            long long base = (a.step_ * static_cast<long long>(i)) / g;
            long long stride = b.step_ / g;
            for (std::size_t j = 0; j < b.c_.size(); ++j) {
                long long k = base + stride * static_cast<long long>(j);
                if (k >= len) break;
                if (!b.c_[j].is_zero()) r.c_[static_cast<std::size_t>(k)] += a.c_[i] * b.c_[j];
            }
        }
        r.normalize();
        return r;
    }

    QSeries scaled(const CycloNumber& v) const {
        QSeries r = *this;
        for (auto& x : r.c_) x = x * v;
        r.normalize();
        return r;
    }
    QSeries scaled(const Rational& v) const {
        QSeries r = *this;
        for (auto& x : r.c_) x = x * v;
        r.normalize();
        return r;
    }

    // multiply by q^e
    QSeries shifted(const Rational& e) const {
        Rational g = e * D_;
        if (rat_den(g) != 1) throw std::invalid_argument("QSeries::shifted: exponent off grid");
        QSeries r = *this;
        r.lead_ += rat_num(g).convert_to<long long>();
        r.T_ += e;
        return r;
    }

    // substitute q -> q^m
    QSeries stretched(long long m) const {
        if (m <= 0) throw std::invalid_argument("QSeries::stretched: m must be positive");
        QSeries r = *this;
        r.lead_ *= m;
        r.step_ *= m;
        r.T_ = r.T_ * m;
        return r;
    }

    /*
     * Reciprocal.  Writing a = q^l u (1 + sum_{k>=1} d_k x^k) with x the step
     * monomial, the reciprocal coefficients satisfy the classic recurrence
     *   b_0 = u^{-1},  b_n = -u^{-1} sum_{k=1}^{n} d_k' b_{n-k},
     * and knowledge propagates to T' = T - 2 l / D.
     */
    QSeries inverted() const {
        if (c_.empty()) throw std::domain_error("QSeries::inverted: zero series");
        if (c_[0].is_zero()) throw std::logic_error("QSeries::inverted: series not normalized");
        Rational Tinv = T_ - make_rational(2 * lead_, D_);
        QSeries r = zero(ring_, D_, Tinv);
        Rational count = (T_ * D_ - Rational(lead_)) / step_;
        long long K = std::max<long long>(rceil(count).convert_to<long long>(), 0);
        if (K == 0) return r;
        r.lead_ = -lead_;
        r.step_ = step_;
        r.c_.assign(static_cast<std::size_t>(K), CycloNumber(ring_));
        CycloNumber u = c_[0].inv();
        r.c_[0] = u;
        for (long long n = 1; n < K; ++n) {
            CycloNumber acc(ring_);
            long long kmax = std::min<long long>(n, static_cast<long long>(c_.size()) - 1);
            for (long long k = 1; k <= kmax; ++k)
                if (!c_[static_cast<std::size_t>(k)].is_zero())
                    acc += c_[static_cast<std::size_t>(k)] * r.c_[static_cast<std::size_t>(n - k)];
            if (!acc.is_zero()) r.c_[static_cast<std::size_t>(n)] = -(u * acc);
        }
        r.normalize();
        return r;
    }

    QSeries powed(long long e) const {
        if (e < 0) return inverted().powed(-e);
        if (e == 0) return one(ring_, D_, T_ - order_known());
        QSeries r = *this;
        for (long long i = 1; i < e; ++i) r = r * *this;
        return r;
    }

    QSeries truncated(const Rational& newT) const {
        QSeries r = *this;
        r.T_ = std::min(r.T_, newT);
        r.normalize();
        return r;
    }

    /*
     * d-th component of the m-dissection: picks the coefficients with
     * exponent = d (mod m) and substitutes q^m -> q, i.e. returns
     * sum_n a_{mn+d} q^n.  Requires integer exponents.
     */
    QSeries dissected(long long m, long long d) const {
        if (m <= 0 || d < 0 || d >= m) throw std::invalid_argument("QSeries::dissected: bad residue");
        if (!c_.empty() && (mod_norm(lead_, D_) != 0 || step_ % D_ != 0))
            throw std::invalid_argument("QSeries::dissected: fractional exponents present");
        Rational Tnew = (T_ - Rational(d)) / m;
        QSeries r = zero(ring_, D_, Tnew);
        std::map<long long, CycloNumber> picked;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            long long e = (lead_ + step_ * static_cast<long long>(i)) / D_;
            if (mod_norm(e - d, m) != 0 || c_[i].is_zero()) continue;
            picked.emplace(floor_div(Int(e - d), Int(m)).convert_to<long long>(), c_[i]);
        }
        if (picked.empty()) return r;
        r.lead_ = picked.begin()->first * D_;
        r.step_ = D_;
        r.c_.assign(static_cast<std::size_t>(picked.rbegin()->first - picked.begin()->first) + 1,
                    CycloNumber(ring_));
        for (auto& [n, v] : picked) r.c_[static_cast<std::size_t>(n - picked.begin()->first)] = std::move(v);
        r.normalize();
        return r;
    }

    // coefficient-wise agreement below both truncation horizons
    bool agrees_with(const QSeries& o) const {
        check_compatible(o);
        Rational T = std::min(T_, o.T_);
        for (std::size_t i = 0; i < c_.size(); ++i) {
            Rational e = make_rational(lead_ + step_ * static_cast<long long>(i), D_);
            if (e >= T) break;
            if (!(c_[i] == o.coeff(e))) return false;
        }
        for (std::size_t i = 0; i < o.c_.size(); ++i) {
            Rational e = make_rational(o.lead_ + o.step_ * static_cast<long long>(i), D_);
            if (e >= T) break;
            if (!(o.c_[i] == coeff(e))) return false;
        }
        return true;
    }

    bool operator==(const QSeries& o) const {
        return D_ == o.D_ && lead_ == o.lead_ && step_ == o.step_ && T_ == o.T_ && c_ == o.c_ &&
               (!ring_ || !o.ring_ || ring_->conductor() == o.ring_->conductor());
    }

    // ---------------------------------------------------------------------
    // numeric evaluation at tau in the upper half plane: partial sum plus a
    // tail estimate |q|^T / (1 - |q|) scaled by the largest recent
    // coefficient magnitude.
    // ---------------------------------------------------------------------
    EvalResult eval(std::complex<double> tau) const {
        if (tau.imag() <= 0) throw std::invalid_argument("QSeries::eval: Im(tau) must be positive");
        constexpr double two_pi = 6.283185307179586476925;
        std::complex<double> acc{0.0, 0.0};
        double cmax = 1.0;
        std::size_t recent = c_.size() >= 10 ? c_.size() - 10 : 0;
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (c_[i].is_zero()) continue;
            double e = static_cast<double>(lead_ + step_ * static_cast<long long>(i)) / D_;
            std::complex<double> qe = std::exp(std::complex<double>(0.0, two_pi * e) * tau);
            std::complex<double> cv = c_[i].embed();
            acc += cv * qe;
            if (i >= recent) cmax = std::max(cmax, std::abs(cv));
        }
        double absq = std::exp(-two_pi * tau.imag());
        double tail = cmax * std::pow(absq, rat_to_double(T_)) / (1.0 - absq);
        return {acc, tail};
    }

    // ---------------------------------------------------------------------
    // serialization: sparse text ("c * q^(e)" lines) and JSON
    // ---------------------------------------------------------------------
    std::string to_text() const {
        std::string out = "qseries conductor=" + std::to_string(ring_->conductor()) +
                          " D=" + std::to_string(D_) + " step=" + std::to_string(step_) +
                          " T=" + rat_to_string(T_) + "\n";
        for (std::size_t i = 0; i < c_.size(); ++i) {
            if (c_[i].is_zero()) continue;
            out += coeff_to_text(c_[i]) + " * q^(" +
                   rat_to_string(make_rational(lead_ + step_ * static_cast<long long>(i), D_)) + ")\n";
        }
        return out;
    }

    static QSeries from_text(const std::string& text) {
        std::map<std::string, std::string> header;
        QSeries r;
        std::vector<std::pair<Rational, CycloNumber>> entries;
        std::size_t pos = 0;
        bool saw_header = false;
        while (pos < text.size()) {
            std::size_t nl = text.find('\n', pos);
            if (nl == std::string::npos) nl = text.size();
            std::string line = text.substr(pos, nl - pos);
            pos = nl + 1;
            if (line.empty() || line[0] == '#') continue;
            if (!saw_header) {
                if (line.rfind("qseries ", 0) != 0) throw std::invalid_argument("QSeries::from_text: missing header");
                std::istringstream hs(line.substr(8));
                std::string kv;
                while (hs >> kv) {
                    auto eq = kv.find('=');
                    if (eq == std::string::npos) throw std::invalid_argument("QSeries::from_text: bad header");
                    header[kv.substr(0, eq)] = kv.substr(eq + 1);
                }
                r = zero(cyclo_ring(std::stoi(header.at("conductor"))), std::stoi(header.at("D")),
                         rat_from_string(header.at("T")));
                saw_header = true;
                continue;
            }
            auto star = line.find(" * q^(");
            if (star == std::string::npos || line.back() != ')')
                throw std::invalid_argument("QSeries::from_text: bad term line");
            CycloNumber cv = coeff_from_text(r.ring_, line.substr(0, star));
            Rational e = rat_from_string(line.substr(star + 6, line.size() - star - 7));
            entries.emplace_back(std::move(e), std::move(cv));
        }
        if (!saw_header) throw std::invalid_argument("QSeries::from_text: empty input");
        QSeries acc = r;
        for (auto& [e, v] : entries) acc = acc + monomial(r.ring_, r.D_, v, e, r.T_);
        acc.T_ = r.T_;
        return acc;
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["conductor"] = ring_->conductor();
        j["D"] = D_;
        j["lead"] = lead_;
        j["step"] = step_;
        j["T"] = rat_to_string(T_);
        nlohmann::ordered_json coeffs = nlohmann::ordered_json::array();
        for (const auto& v : c_) {
            nlohmann::ordered_json entry = nlohmann::ordered_json::array();
            for (const auto& r : v.coeffs()) entry.push_back(rat_to_string(r));
            coeffs.push_back(std::move(entry));
        }
        j["coeffs"] = std::move(coeffs);
        return j;
    }

    static QSeries from_json(const nlohmann::json& j) {
        QSeries r = zero(cyclo_ring(j.at("conductor").get<int>()), j.at("D").get<int>(),
                         rat_from_string(j.at("T").get<std::string>()));
        r.lead_ = j.at("lead").get<long long>();
        r.step_ = j.contains("step") ? j.at("step").get<long long>() : 1;
        for (const auto& entry : j.at("coeffs")) {
            std::vector<Rational> coords;
            for (const auto& s : entry) coords.push_back(rat_from_string(s.get<std::string>()));
            r.c_.push_back(CycloNumber::from_coeffs(r.ring_, std::move(coords)));
        }
        r.normalize();
        return r;
    }

  private:
    static Rational D_of(const QSeries& s) { return Rational(s.D_); }

    void check_compatible(const QSeries& o) const {
        if (!ring_ || !o.ring_ || ring_->conductor() != o.ring_->conductor() || D_ != o.D_)
            throw std::invalid_argument("QSeries: ring or grid mismatch");
    }

    static std::string coeff_to_text(const CycloNumber& v) {
        if (v.is_rational()) return rat_to_string(v.to_rational());
        std::string out = "[";
        std::size_t last = v.coeffs().size();
        while (last > 0 && v.coeffs()[last - 1] == 0) --last;
        for (std::size_t i = 0; i < last; ++i) {
            if (i) out += ",";
            out += rat_to_string(v.coeffs()[i]);
        }
        return out + "]";
    }

    static CycloNumber coeff_from_text(const RingPtr& ring, const std::string& s) {
        if (s.empty()) throw std::invalid_argument("QSeries: empty coefficient");
        if (s[0] != '[') return CycloNumber(ring, rat_from_string(s));
        if (s.back() != ']') throw std::invalid_argument("QSeries: bad coefficient list");
        std::vector<Rational> coords;
        std::size_t pos = 1;
        while (pos < s.size() - 1) {
            std::size_t comma = s.find(',', pos);
            if (comma == std::string::npos || comma > s.size() - 1) comma = s.size() - 1;
            coords.push_back(rat_from_string(s.substr(pos, comma - pos)));
            pos = comma + 1;
        }
        return CycloNumber::from_coeffs(ring, std::move(coords));
    }

    /*
     * Canonical form: drop stored entries at or beyond T, strip zero margins,
     * and re-stride so that step is the gcd of the occupied offsets.  Keeping
     * the stride maximal makes products between sparse series (everything on
     * the q^7 or q^49 grids) run on tiny arrays.
     */
    void normalize() {
        // cap storage at the knowledge horizon
        while (!c_.empty()) {
            Rational e = make_rational(lead_ + step_ * (static_cast<long long>(c_.size()) - 1), D_);
            if (e < T_) break;
            c_.pop_back();
        }
        std::size_t first = 0;
        while (first < c_.size() && c_[first].is_zero()) ++first;
        if (first == c_.size()) {
            c_.clear();
            lead_ = 0;
            step_ = 1;
            return;
        }
        std::size_t lastn = c_.size();
        while (lastn > first && c_[lastn - 1].is_zero()) --lastn;
        if (first > 0 || lastn < c_.size()) {
            std::vector<CycloNumber> kept(c_.begin() + static_cast<long long>(first),
                                          c_.begin() + static_cast<long long>(lastn));
            c_ = std::move(kept);
            lead_ += step_ * static_cast<long long>(first);
        }
        long long g = 0;
        for (std::size_t i = 1; i < c_.size(); ++i)
            if (!c_[i].is_zero()) g = std::gcd(g, static_cast<long long>(i));
        if (g > 1) {
            std::vector<CycloNumber> packed;
            packed.reserve(c_.size() / g + 1);
            for (std::size_t i = 0; i < c_.size(); i += g) packed.push_back(std::move(c_[i]));
            c_ = std::move(packed);
            step_ *= g;
        }
    }

    RingPtr ring_;
    int D_ = 1;
    long long lead_ = 0;
    long long step_ = 1;
    std::vector<CycloNumber> c_;
    Rational T_{0};
};

// ---------------------------------------------------------------------------
// product builders
// ---------------------------------------------------------------------------

/*
 * (z q^a; q^b)_infinity = prod_{j>=0} (1 - z q^{a+jb}), built factor by factor
 * with early exit once a + jb >= T (those factors are 1 up to the horizon).
 */
inline QSeries pochhammer_series(const RingPtr& ring, int D, const CycloNumber& z, const Rational& a,
                                 const Rational& b, const Rational& T) {
    if (b <= 0) throw std::invalid_argument("pochhammer_series: modulus must be positive");
    if (a < 0) throw std::invalid_argument("pochhammer_series: negative exponent");
    QSeries acc = QSeries::one(ring, D, T);
    if (z.is_zero()) return acc;
    for (Rational e = a; e < T; e += b) {
        // acc *= (1 - z q^e) without building the binomial: acc - z q^e acc
        acc = acc - acc.shifted(e).scaled(z).truncated(T);
    }
    return acc;
}

// j(z q^a; q^b) = (z q^a; q^b)_inf (z^{-1} q^{b-a}; q^b)_inf
inline QSeries jacprod_series(const RingPtr& ring, int D, const CycloNumber& z, const Rational& a,
                              const Rational& b, const Rational& T) {
    return pochhammer_series(ring, D, z, a, b, T) * pochhammer_series(ring, D, z.inv(), b - a, b, T);
}

// Dedekind eta: eta(m tau) = q^{m/24} (q^m; q^m)_inf
inline QSeries eta_series(const RingPtr& ring, int D, long long m, const Rational& T) {
    Rational leadexp = make_rational(m, 24);
    if (rat_den(leadexp * D) != 1) throw std::invalid_argument("eta_series: grid too coarse for m/24");
    return pochhammer_series(ring, D, CycloNumber(ring, 1), Rational(m), Rational(m), T - leadexp)
        .shifted(leadexp);
}

// 1/(1 - zeta q^s) = sum_{j>=0} zeta^j q^{js}, s > 0
inline QSeries geometric_series(const RingPtr& ring, int D, const CycloNumber& zeta, const Rational& s,
                                const Rational& T) {
    if (s <= 0) throw std::invalid_argument("geometric_series: exponent must be positive");
    QSeries acc = QSeries::zero(ring, D, T);
    CycloNumber pow(ring, 1);
    for (Rational e(0); e < T; e += s) {
        acc = acc + QSeries::monomial(ring, D, pow, e, T);
        pow = pow * zeta;
    }
    return acc;
}

// exp(2 pi i r) as an exact element (r rational); throws if the ring lacks it
inline CycloNumber root_of_unity(const RingPtr& ring, const Rational& r) {
    Rational f = rfrac(r);
    long long den = rat_den(f).convert_to<long long>();
    long long num = rat_num(f).convert_to<long long>();
    if (den == 1) return CycloNumber(ring, 1);
    if (den == 2) return CycloNumber(ring, -1);
    if (ring->conductor() % den != 0)
        throw std::invalid_argument("root_of_unity: conductor lacks exp(2 pi i " + rat_to_string(r) + ")");
    return CycloNumber::zeta(ring, (ring->conductor() / den) * num);
}

/*
 * Klein form at modulus m:
 *
 *   t_{(a1,a2)}(m tau) = -q_m^{B2(a1) - 1/12} exp(pi i a2 (a1-1))
 *                         j(zeta; q_m) / (q_m; q_m)_inf^2,
 *
 * with q_m = q^m, B2(x) = x^2 - x + 1/6 and zeta = exp(2 pi i (a1 m tau + a2)).
 * Callers must reduce a1 into [0,1) first (shift rule below).
 */
inline QSeries klein_series(const RingPtr& ring, int D, const Rational& a1, const Rational& a2,
                            long long m, const Rational& T) {
    if (a1 < 0 || a1 >= 1) throw std::invalid_argument("klein_series: need 0 <= a1 < 1");
    Rational B2 = a1 * a1 - a1 + make_rational(1, 6);
    Rational leadexp = (B2 - make_rational(1, 12)) * m;
    CycloNumber phase = -root_of_unity(ring, a2 * (a1 - 1) / 2);
    CycloNumber zeta = root_of_unity(ring, a2);
    Rational Tcore = T - leadexp;
    QSeries jac = pochhammer_series(ring, D, zeta, a1 * m, Rational(m), Tcore) *
                  pochhammer_series(ring, D, zeta.inv(), (Rational(1) - a1) * m, Rational(m), Tcore);
    QSeries den2 = pochhammer_series(ring, D, CycloNumber(ring, 1), Rational(m), Rational(m), Tcore).powed(2);
    return (jac * den2.inverted()).scaled(phase).shifted(leadexp).truncated(T);
}

// Shift rule: t_{(a1+b1, a2+b2)} = (-1)^{b1 b2 + b1 + b2} exp(-pi i (b1 a2 - b2 a1)) t_{(a1,a2)};
// returns the exact phase for integer shifts (b1, b2).
inline CycloNumber klein_shift_phase(const RingPtr& ring, long long b1, long long b2, const Rational& a1,
                                     const Rational& a2) {
    CycloNumber sign(ring, (b1 * b2 + b1 + b2) % 2 == 0 ? 1 : -1);
    return sign * root_of_unity(ring, -(Rational(b1) * a2 - Rational(b2) * a1) / 2);
}

/*
 * Biagioli-style theta product
 *
 *   f_{N,rho}(tau) = q^{(N-2rho)^2 / (8N)} (q^rho, q^{N-rho}, q^N; q^N)_inf,
 *
 * reduced first by f_{N,rho} = f_{N,N+rho} = f_{N,-rho} to 0 < rho < N.
 */
inline QSeries fNrho_series(const RingPtr& ring, int D, long long N, long long rho, const Rational& T) {
    if (N <= 0) throw std::invalid_argument("fNrho_series: N must be positive");
    rho = mod_norm(rho, N);
    if (rho == 0) throw std::invalid_argument("fNrho_series: N divides rho");
    Rational leadexp = make_rational((N - 2 * rho) * (N - 2 * rho), 8 * N);
    Rational Tc = T - leadexp;
    CycloNumber unit(ring, 1);
    QSeries prod = pochhammer_series(ring, D, unit, Rational(rho), Rational(N), Tc) *
                   pochhammer_series(ring, D, unit, Rational(N - rho), Rational(N), Tc) *
                   pochhammer_series(ring, D, unit, Rational(N), Rational(N), Tc);
    return prod.shifted(leadexp);
}

// ---------------------------------------------------------------------------
// ProductSpec: a tiny expression tree over Pochhammer symbols, q-powers and
// constants, used to cross-check expanded series against direct numeric
// evaluation of the products.
// ---------------------------------------------------------------------------
class ProductSpec {
  public:
    static ProductSpec pochhammer(CycloNumber z, Rational a, Rational b) {
        if (b <= 0) throw std::invalid_argument("ProductSpec::pochhammer: modulus must be positive");
        ProductSpec p;
        p.kind_ = Kind::Pochhammer;
        p.z_ = std::move(z);
        p.a_ = std::move(a);
        p.b_ = std::move(b);
        return p;
    }
    static ProductSpec qpower(Rational e) {
        ProductSpec p;
        p.kind_ = Kind::QPower;
        p.a_ = std::move(e);
        return p;
    }
    static ProductSpec constant(CycloNumber v) {
        ProductSpec p;
        p.kind_ = Kind::Constant;
        p.z_ = std::move(v);
        return p;
    }

    ProductSpec operator*(const ProductSpec& o) const {
        ProductSpec p;
        p.kind_ = Kind::Mul;
        p.kids_ = {*this, o};
        return p;
    }
    ProductSpec pow(int k) const {
        ProductSpec p;
        p.kind_ = Kind::Pow;
        p.exp_ = k;
        p.kids_ = {*this};
        return p;
    }

    QSeries to_series(const RingPtr& ring, int D, const Rational& T) const {
        switch (kind_) {
            case Kind::Pochhammer:
                return pochhammer_series(ring, D, z_.embed_into(ring), a_, b_, T);
            case Kind::QPower:
                return QSeries::monomial(ring, D, CycloNumber(ring, 1), a_, T + a_);
            case Kind::Constant:
                return QSeries::constant(ring, D, z_.embed_into(ring), T);
            case Kind::Mul:
                return kids_[0].to_series(ring, D, T) * kids_[1].to_series(ring, D, T);
            case Kind::Pow: {
                QSeries base = kids_[0].to_series(ring, D, T);
                return base.powed(exp_);
            }
        }
        throw std::logic_error("ProductSpec::to_series: unreachable");
    }

    EvalResult eval(std::complex<double> tau) const {
        if (tau.imag() <= 0) throw std::invalid_argument("ProductSpec::eval: Im(tau) must be positive");
        constexpr double two_pi = 6.283185307179586476925;
        switch (kind_) {
            case Kind::Pochhammer: {
                double absq = std::exp(-two_pi * tau.imag());
                std::complex<double> zc = z_.embed();
                std::complex<double> acc{1.0, 0.0};
                double e = rat_to_double(a_), db = rat_to_double(b_);
                while (std::abs(zc) * std::pow(absq, e) >= 1e-18) {
                    acc *= 1.0 - zc * std::exp(std::complex<double>(0.0, two_pi * e) * tau);
                    e += db;
                }
                // remaining factors multiply by 1 + O(|z| |q|^e / (1 - |q|^b))
                double relerr = std::abs(zc) * std::pow(absq, e) / (1.0 - std::pow(absq, db));
                return {acc, std::abs(acc) * relerr};
            }
            case Kind::QPower:
                return {std::exp(std::complex<double>(0.0, two_pi * rat_to_double(a_)) * tau), 0.0};
            case Kind::Constant:
                return {z_.embed(), 0.0};
            case Kind::Mul: {
                EvalResult l = kids_[0].eval(tau), r = kids_[1].eval(tau);
                double rel = rel_of(l) + rel_of(r);
                std::complex<double> v = l.value * r.value;
                return {v, std::abs(v) * rel};
            }
            case Kind::Pow: {
                EvalResult b = kids_[0].eval(tau);
                std::complex<double> v = std::pow(b.value, exp_);
                return {v, std::abs(v) * rel_of(b) * std::abs(exp_)};
            }
        }
        throw std::logic_error("ProductSpec::eval: unreachable");
    }

  private:
    static double rel_of(const EvalResult& r) {
        double av = std::abs(r.value);
        return av > 0 ? r.tail_bound / av : 0.0;
    }

    enum class Kind { Pochhammer, QPower, Constant, Mul, Pow };
    Kind kind_ = Kind::Constant;
    CycloNumber z_;
    Rational a_{0}, b_{1};
    int exp_ = 1;
    std::vector<ProductSpec> kids_;
};

}  // namespace qdissect
