#pragma once

#include "literal.hpp"
#include "scalar.hpp"

namespace starmod {

/**
 * Element of the fraction field of C: Q(i) itself in the rational variant,
 * Q(lambda)(i) in the polynomial variant.
 *
 * Invariants: den is nonzero and monic, gcd(num, den) = 1.  The order on real
 * elements extends the ring order (sign of the lowest-order coefficient), so
 * positivity decisions taken here agree with ring-level decisions after
 * clearing denominators.
 */
class CFrac {
public:
    CFrac() : num_(), den_(Scalar::one(RingVariant::rational)) {}

    explicit CFrac(RingVariant v) : num_(v), den_(Scalar::one(v)) {}

    explicit CFrac(Scalar n) : num_(std::move(n)), den_(Scalar::one(num_.variant())) {}

    CFrac(Scalar n, Scalar d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    static CFrac zero(RingVariant v) { return CFrac(v); }
    static CFrac one(RingVariant v) { return CFrac(Scalar::one(v)); }

    const Scalar& num() const { return num_; }
    const Scalar& den() const { return den_; }
    RingVariant variant() const { return num_.variant(); }

    bool is_zero() const { return num_.is_zero(); }
    bool is_one() const { return num_.is_one() && den_.is_one(); }

    // Ring element when the denominator is trivial.
    std::optional<Scalar> to_ring() const {
        if (den_.is_one()) return num_;
        return std::nullopt;
    }

    CFrac conj() const { return CFrac(num_.conj(), den_.conj()); }

    bool is_real() const {
        // num/den real iff num * conj(den) has zero imaginary part.
        return (num_ * den_.conj()).is_real();
    }

    // Sign in the ordered field; defined for real elements only.
    int sign_real() const {
        Scalar s = num_ * den_.conj();
        if (!s.is_real()) throw std::domain_error("CFrac::sign_real: element is not real");
        return s.re().sign();
    }

    friend CFrac operator+(const CFrac& a, const CFrac& b) {
        return CFrac(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }

    friend CFrac operator-(const CFrac& a, const CFrac& b) {
        return CFrac(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }

    CFrac operator-() const {
        CFrac r = *this;
        r.num_ = -r.num_;
        return r;
    }

    friend CFrac operator*(const CFrac& a, const CFrac& b) {
        return CFrac(a.num_ * b.num_, a.den_ * b.den_);
    }

    friend CFrac operator/(const CFrac& a, const CFrac& b) {
        if (b.is_zero()) throw std::domain_error("CFrac: division by zero");
        return CFrac(a.num_ * b.den_, a.den_ * b.num_);
    }

    CFrac& operator+=(const CFrac& b) { return *this = *this + b; }
    CFrac& operator-=(const CFrac& b) { return *this = *this - b; }
    CFrac& operator*=(const CFrac& b) { return *this = *this * b; }
    CFrac& operator/=(const CFrac& b) { return *this = *this / b; }

    friend bool operator==(const CFrac& a, const CFrac& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    friend bool operator!=(const CFrac& a, const CFrac& b) { return !(a == b); }

private:
    void normalize() {
        if (den_.is_zero()) throw std::domain_error("CFrac: zero denominator");
        if (num_.is_zero()) {
            den_ = Scalar::one(num_.variant());
            return;
        }
        if (den_.is_one()) return;
        Scalar g = scalar_gcd(num_, den_);
        if (!g.is_one()) {
            num_ = *Scalar::divide_exact(num_, g);
            den_ = *Scalar::divide_exact(den_, g);
        }
        // Make den monic: divide both by its leading Q(i) coefficient.
        int d = den_.degree();
        auto [lc_re, lc_im] = den_.coeff(d);
        if (!(lc_re == 1 && lc_im == 0)) {
            Rat n = lc_re * lc_re + lc_im * lc_im;
            RingVariant v = num_.variant();
            Scalar inv(BaseRingElement(lc_re / n, v), BaseRingElement(-lc_im / n, v));
            num_ *= inv;
            den_ *= inv;
        }
    }

    Scalar num_, den_;
};

inline CFrac conj(const CFrac& x) { return x.conj(); }

inline std::string print_fraction(const CFrac& x) {
    if (x.den().is_one()) return print_scalar(x.num());
    return "(" + print_scalar(x.num()) + ")/(" + print_scalar(x.den()) + ")";
}

}  // namespace starmod
