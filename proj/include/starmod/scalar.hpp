#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "base_ring.hpp"

namespace starmod {

/**
 * Scalar of the coefficient ring C = R(i), stored as a real/imaginary pair
 * over the ordered ring R with i^2 = -1.  Both parts share one variant tag.
 *
 * Conjugation negates the imaginary part (lambda is real).  Viewed as a
 * polynomial in lambda with coefficients in Q(i), C is a Euclidean domain;
 * quo_rem below is ordinary polynomial division on that view.
 */
class Scalar {
public:
    Scalar() : re_(), im_() {}

    explicit Scalar(RingVariant v) : re_(v), im_(v) {}

    Scalar(BaseRingElement re, BaseRingElement im) : re_(std::move(re)), im_(std::move(im)) {
        if (re_.variant() != im_.variant())
            throw std::invalid_argument("Scalar: re/im variant mismatch");
    }

    explicit Scalar(Rat r, RingVariant v = RingVariant::rational)
        : re_(std::move(r), v), im_(v) {}

    static Scalar zero(RingVariant v) { return Scalar(v); }

    static Scalar one(RingVariant v) { return Scalar(BaseRingElement::one(v), BaseRingElement(v)); }

    static Scalar i_unit(RingVariant v) {
        return Scalar(BaseRingElement(v), BaseRingElement::one(v));
    }

    static Scalar lambda(int power = 1, RingVariant v = RingVariant::lambda_poly) {
        if (v != RingVariant::lambda_poly)
            throw std::invalid_argument("Scalar::lambda: requires lambda_poly variant");
        return Scalar(BaseRingElement::lambda_power(power), BaseRingElement(v));
    }

    const BaseRingElement& re() const { return re_; }
    const BaseRingElement& im() const { return im_; }
    RingVariant variant() const { return re_.variant(); }

    bool is_zero() const { return re_.is_zero() && im_.is_zero(); }
    bool is_one() const { return re_.is_one() && im_.is_zero(); }
    bool is_real() const { return im_.is_zero(); }

    Scalar conj() const { return Scalar(re_, -im_); }

    // Degree of the Q(i)[lambda] view; -1 for zero.
    int degree() const { return std::max(re_.degree(), im_.degree()); }

    Scalar at_zero() const { return Scalar(re_.at_zero(), im_.at_zero()); }

    Scalar to_variant(RingVariant v) const {
        return Scalar(re_.to_variant(v), im_.to_variant(v));
    }

    // |z|^2 = z * conj(z), a nonnegative element of R.
    BaseRingElement norm_sq() const { return re_ * re_ + im_ * im_; }

    friend Scalar operator+(const Scalar& a, const Scalar& b) {
        return Scalar(a.re_ + b.re_, a.im_ + b.im_);
    }

    friend Scalar operator-(const Scalar& a, const Scalar& b) {
        return Scalar(a.re_ - b.re_, a.im_ - b.im_);
    }

    Scalar operator-() const { return Scalar(-re_, -im_); }

    friend Scalar operator*(const Scalar& a, const Scalar& b) {
        return Scalar(a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_);
    }

    Scalar& operator+=(const Scalar& b) { return *this = *this + b; }
    Scalar& operator-=(const Scalar& b) { return *this = *this - b; }
    Scalar& operator*=(const Scalar& b) { return *this = *this * b; }

    friend bool operator==(const Scalar& a, const Scalar& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }

    friend bool operator!=(const Scalar& a, const Scalar& b) { return !(a == b); }

    // Coefficient of lambda^r as a complex rational pair.
    std::pair<Rat, Rat> coeff(int r) const { return {re_.coeff(r), im_.coeff(r)}; }

    // Division with remainder in Q(i)[lambda]; deg(rem) < deg(b).  b must be nonzero.
    static std::pair<Scalar, Scalar> quo_rem(const Scalar& a, const Scalar& b) {
        if (b.is_zero()) throw std::domain_error("Scalar::quo_rem: division by zero");
        if (a.variant() != b.variant())
            throw std::invalid_argument("Scalar::quo_rem: variant mismatch");
        RingVariant v = a.variant();
        const int db = b.degree();
        auto [lb_re, lb_im] = b.coeff(db);
        Rat lb_norm = lb_re * lb_re + lb_im * lb_im;
        Scalar q = Scalar::zero(v);
        Scalar r = a;
        while (!r.is_zero() && r.degree() >= db) {
            int dr = r.degree();
            auto [lr_re, lr_im] = r.coeff(dr);
            // (lr / lb) in Q(i)
            Rat c_re = (lr_re * lb_re + lr_im * lb_im) / lb_norm;
            Rat c_im = (lr_im * lb_re - lr_re * lb_im) / lb_norm;
            Scalar t(BaseRingElement::lambda_power(dr - db, c_re).to_variant(v),
                     BaseRingElement::lambda_power(dr - db, c_im).to_variant(v));
            q += t;
            r -= t * b;
            if (!r.is_zero() && r.degree() >= dr) {
                // Leading term did not cancel; numeric invariant violated.
                throw std::logic_error("Scalar::quo_rem: no progress");
            }
        }
        return {q, r};
    }

    // Exact quotient a / b when the remainder vanishes.
    static std::optional<Scalar> divide_exact(const Scalar& a, const Scalar& b) {
        auto [q, r] = quo_rem(a, b);
        if (!r.is_zero()) return std::nullopt;
        return q;
    }

private:
    BaseRingElement re_, im_;
};

// Positive rational dividing every coefficient of both parts; 0 for zero.
inline Rat rational_content(const Scalar& s) {
    using boost::multiprecision::cpp_int;
    cpp_int num_g = 0, den_l = 1;
    auto absorb = [&](const BaseRingElement& p) {
        for (const Rat& c : p.coeffs()) {
            if (c == 0) continue;
            cpp_int n = boost::multiprecision::numerator(c);
            if (n < 0) n = -n;
            num_g = num_g == 0 ? n : boost::multiprecision::gcd(num_g, n);
            den_l = boost::multiprecision::lcm(den_l, boost::multiprecision::denominator(c));
        }
    };
    absorb(s.re());
    absorb(s.im());
    if (num_g == 0) return Rat(0);
    return Rat(num_g, den_l);
}

// Monic normalization: divide by the leading Q(i) coefficient.
inline Scalar make_monic(const Scalar& a) {
    if (a.is_zero()) return a;
    int d = a.degree();
    auto [lc_re, lc_im] = a.coeff(d);
    Rat n = lc_re * lc_re + lc_im * lc_im;
    Scalar inv_lc(BaseRingElement(lc_re / n, a.variant()),
                  BaseRingElement(-lc_im / n, a.variant()));
    return a * inv_lc;
}

// The Euclidean remainder sequence in Q(i)[lambda] suffers quadratic
// coefficient blowup, so gcds run modulo machine primes p = 3 (mod 4),
// where F_p[i] is a field, and lift back by Chinese remaindering plus
// rational reconstruction.  The lift is verified by exact division, so a
// returned value is always correct; unlucky primes only cost retries.
namespace gcddetail {

inline std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t p) {
    std::int64_t t = 0, nt = 1;
    std::int64_t r = static_cast<std::int64_t>(p), nr = static_cast<std::int64_t>(a % p);
    while (nr != 0) {
        std::int64_t q = r / nr;
        std::int64_t tmp = t - q * nt;
        t = nt;
        nt = tmp;
        tmp = r - q * nr;
        r = nr;
        nr = tmp;
    }
    if (t < 0) t += static_cast<std::int64_t>(p);
    return static_cast<std::uint64_t>(t);
}

struct Fp2 {
    std::uint64_t re = 0, im = 0;
    bool zero() const { return re == 0 && im == 0; }
};

inline Fp2 fp2_mul(const Fp2& a, const Fp2& b, std::uint64_t p) {
    std::uint64_t t1 = a.re * b.re % p, t2 = a.im * b.im % p;
    return {(t1 + p - t2) % p, (a.re * b.im + a.im * b.re) % p};
}

inline Fp2 fp2_sub(const Fp2& a, const Fp2& b, std::uint64_t p) {
    return {(a.re + p - b.re) % p, (a.im + p - b.im) % p};
}

inline Fp2 fp2_inv(const Fp2& a, std::uint64_t p) {
    std::uint64_t n = (a.re * a.re % p + a.im * a.im % p) % p;
    std::uint64_t ni = mod_inverse(n, p);
    return {a.re * ni % p, (p - a.im) % p * ni % p};
}

using ModPoly = std::vector<Fp2>;  // coefficients by ascending degree, trimmed

inline void mp_trim(ModPoly& a) {
    while (!a.empty() && a.back().zero()) a.pop_back();
}

inline ModPoly mp_rem(ModPoly a, const ModPoly& b, std::uint64_t p) {
    Fp2 lb_inv = fp2_inv(b.back(), p);
    while (a.size() >= b.size() && !a.empty()) {
        Fp2 f = fp2_mul(a.back(), lb_inv, p);
        std::size_t off = a.size() - b.size();
        for (std::size_t k = 0; k < b.size(); ++k)
            a[off + k] = fp2_sub(a[off + k], fp2_mul(f, b[k], p), p);
        mp_trim(a);
    }
    return a;
}

inline ModPoly mp_gcd(ModPoly a, ModPoly b, std::uint64_t p) {
    mp_trim(a);
    mp_trim(b);
    while (!b.empty()) {
        ModPoly r = mp_rem(std::move(a), b, p);
        a = std::move(b);
        b = std::move(r);
    }
    if (!a.empty()) {
        Fp2 inv = fp2_inv(a.back(), p);
        for (auto& c : a) c = fp2_mul(c, inv, p);
    }
    return a;
}

inline std::optional<std::uint64_t> rat_mod(const Rat& x, std::uint64_t p) {
    using boost::multiprecision::cpp_int;
    cpp_int pm(p);
    cpp_int dm = boost::multiprecision::denominator(x) % pm;
    if (dm == 0) return std::nullopt;
    cpp_int nm = boost::multiprecision::numerator(x) % pm;
    if (nm < 0) nm += pm;
    std::uint64_t n = nm.convert_to<std::uint64_t>();
    std::uint64_t d = dm.convert_to<std::uint64_t>();
    return n * mod_inverse(d, p) % p;
}

inline std::optional<ModPoly> to_mod(const Scalar& s, std::uint64_t p) {
    ModPoly out;
    for (int r = 0; r <= s.degree(); ++r) {
        auto [cr, ci] = s.coeff(r);
        auto mr = rat_mod(cr, p), mi = rat_mod(ci, p);
        if (!mr || !mi) return std::nullopt;
        out.push_back({*mr, *mi});
    }
    mp_trim(out);
    return out;
}

inline std::optional<Rat> rat_reconstruct(const boost::multiprecision::cpp_int& v,
                                          const boost::multiprecision::cpp_int& m) {
    using boost::multiprecision::cpp_int;
    cpp_int r0 = m, r1 = v % m;
    if (r1 < 0) r1 += m;
    cpp_int s0 = 0, s1 = 1;
    cpp_int half = m / 2;
    cpp_int bound = boost::multiprecision::sqrt(half);
    while (r1 > bound) {
        cpp_int q = r0 / r1;
        cpp_int r2 = r0 - q * r1;
        r0 = r1;
        r1 = r2;
        cpp_int s2 = s0 - q * s1;
        s0 = s1;
        s1 = s2;
    }
    if (s1 == 0) return std::nullopt;
    cpp_int a = r1, b = s1;
    if (b < 0) {
        a = -a;
        b = -b;
    }
    if (b > bound || boost::multiprecision::gcd(a, b) != 1) return std::nullopt;
    return Rat(a, b);
}

// Primes = 3 (mod 4) just above 2^30; products with operands < p stay in range.
inline const std::vector<std::uint64_t>& gcd_primes() {
    static const std::vector<std::uint64_t> ps = [] {
        std::vector<std::uint64_t> out;
        for (std::uint64_t c = (1ull << 30) + 3; out.size() < 48; c += 4) {
            bool prime = true;
            for (std::uint64_t d = 3; d * d <= c && prime; d += 2)
                if (c % d == 0) prime = false;
            if (prime) out.push_back(c);
        }
        return out;
    }();
    return ps;
}

}  // namespace gcddetail

// Monic gcd in Q(i)[lambda] (gcd of nonzero rationals is 1).
inline Scalar scalar_gcd(Scalar a, Scalar b) {
    using boost::multiprecision::cpp_int;
    if (a.variant() != b.variant())
        throw std::invalid_argument("scalar_gcd: variant mismatch");
    RingVariant v = a.variant();
    if (a.is_zero()) return make_monic(b);
    if (b.is_zero()) return make_monic(a);
    if (a.degree() == 0 || b.degree() == 0) return Scalar::one(v);

    auto strip = [](Scalar& s) {
        Rat c = rational_content(s);
        if (c != 1) s = s * Scalar(Rat(1) / c, s.variant());
    };
    strip(a);
    strip(b);

    int best_deg = -1;
    std::vector<cpp_int> acc_re, acc_im;
    cpp_int modulus = 1;
    for (std::uint64_t p : gcddetail::gcd_primes()) {
        auto ia = gcddetail::to_mod(a, p);
        auto ib = gcddetail::to_mod(b, p);
        if (!ia || !ib) continue;
        // A prime dividing a leading coefficient shrinks the image degree
        // and can enlarge the modular gcd; skip it.
        if (static_cast<int>(ia->size()) - 1 != a.degree() ||
            static_cast<int>(ib->size()) - 1 != b.degree())
            continue;
        gcddetail::ModPoly g = gcddetail::mp_gcd(std::move(*ia), std::move(*ib), p);
        int dg = static_cast<int>(g.size()) - 1;
        if (dg == 0) return Scalar::one(v);  // coprime images force a unit gcd
        if (best_deg >= 0 && dg > best_deg) continue;
        if (best_deg < 0 || dg < best_deg) {
            best_deg = dg;
            acc_re.assign(static_cast<std::size_t>(dg) + 1, 0);
            acc_im.assign(static_cast<std::size_t>(dg) + 1, 0);
            modulus = 1;
        }
        // Chinese remainder step for every coefficient.
        cpp_int pm(p);
        cpp_int minv_val = modulus % pm;
        std::uint64_t minv =
            gcddetail::mod_inverse(minv_val.convert_to<std::uint64_t>(), p);
        for (std::size_t k = 0; k <= static_cast<std::size_t>(best_deg); ++k) {
            auto lift = [&](cpp_int& cur, std::uint64_t val) {
                cpp_int curp = cur % pm;
                std::uint64_t delta =
                    (val + p - curp.convert_to<std::uint64_t>()) % p * minv % p;
                cur += modulus * delta;
            };
            lift(acc_re[k], g[k].re);
            lift(acc_im[k], g[k].im);
        }
        modulus *= pm;

        // Try to lift to rational coefficients and verify by division.
        std::vector<Rat> lifted_re, lifted_im;
        bool lifted = true;
        for (std::size_t k = 0; k <= static_cast<std::size_t>(best_deg) && lifted; ++k) {
            auto rr = gcddetail::rat_reconstruct(acc_re[k], modulus);
            auto ri = gcddetail::rat_reconstruct(acc_im[k], modulus);
            if (!rr || !ri) {
                lifted = false;
                break;
            }
            lifted_re.push_back(*rr);
            lifted_im.push_back(*ri);
        }
        if (!lifted) continue;
        Scalar cand(BaseRingElement::from_coeffs(std::move(lifted_re), v),
                    BaseRingElement::from_coeffs(std::move(lifted_im), v));
        if (Scalar::divide_exact(a, cand) && Scalar::divide_exact(b, cand)) return cand;
    }

    // All primes exhausted (effectively unreachable): primitive remainder
    // sequence as a slow exact fallback.
    while (!b.is_zero()) {
        auto [q, r] = Scalar::quo_rem(a, b);
        (void)q;
        if (!r.is_zero()) strip(r);
        a = b;
        b = r;
    }
    return make_monic(a);
}

}  // namespace starmod
