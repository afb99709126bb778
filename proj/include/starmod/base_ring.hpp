#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace starmod {

using Rat = boost::multiprecision::cpp_rational;

// Coefficient ring variant: plain rationals, or polynomials in the formal
// parameter lambda with rational coefficients.
enum class RingVariant { rational, lambda_poly };

inline const char* variant_name(RingVariant v) {
    return v == RingVariant::rational ? "rational" : "lambda_poly";
}

/**
 * Element of the ordered coefficient ring R, where R is either Q or Q[lambda].
 *
 * Invariants: coefficient list has no trailing zeros; rational-variant
 * elements store at most one coefficient.  An element is positive iff its
 * lowest-order nonzero coefficient is positive, which orders Q[lambda] so
 * that lambda is positive but smaller than every positive rational.
 */
class BaseRingElement {
public:
    BaseRingElement() : variant_(RingVariant::rational) {}

    explicit BaseRingElement(RingVariant v) : variant_(v) {}

    BaseRingElement(Rat value, RingVariant v = RingVariant::rational) : variant_(v) {
        if (value != 0) coeffs_.push_back(std::move(value));
    }

    static BaseRingElement zero(RingVariant v) { return BaseRingElement(v); }

    static BaseRingElement one(RingVariant v) { return BaseRingElement(Rat(1), v); }

    // coeffs[r] is the coefficient of lambda^r.
    static BaseRingElement from_coeffs(std::vector<Rat> coeffs, RingVariant v) {
        if (v == RingVariant::rational && coeffs.size() > 1) {
            for (std::size_t r = 1; r < coeffs.size(); ++r)
                if (coeffs[r] != 0)
                    throw std::invalid_argument(
                        "BaseRingElement::from_coeffs: rational variant with lambda terms");
            coeffs.resize(1);
        }
        BaseRingElement e(v);
        e.coeffs_ = std::move(coeffs);
        e.trim();
        return e;
    }

    static BaseRingElement lambda_power(int r, Rat coeff = Rat(1)) {
        if (r < 0) throw std::invalid_argument("BaseRingElement::lambda_power: negative power");
        std::vector<Rat> c(static_cast<std::size_t>(r) + 1, Rat(0));
        c.back() = std::move(coeff);
        return from_coeffs(std::move(c), RingVariant::lambda_poly);
    }

    RingVariant variant() const { return variant_; }

    bool is_zero() const { return coeffs_.empty(); }

    bool is_one() const { return coeffs_.size() == 1 && coeffs_[0] == 1; }

    // Degree in lambda; -1 for the zero element.
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    Rat coeff(int r) const {
        if (r < 0 || r >= static_cast<int>(coeffs_.size())) return Rat(0);
        return coeffs_[static_cast<std::size_t>(r)];
    }

    const std::vector<Rat>& coeffs() const { return coeffs_; }

    // Order of the lowest nonzero term; -1 for zero.
    int low_order() const {
        for (std::size_t r = 0; r < coeffs_.size(); ++r)
            if (coeffs_[r] != 0) return static_cast<int>(r);
        return -1;
    }

    // Sign in the ordered ring: the sign of the lowest-order nonzero coefficient.
    int sign() const {
        int r = low_order();
        if (r < 0) return 0;
        return coeffs_[static_cast<std::size_t>(r)] > 0 ? 1 : -1;
    }

    bool is_positive() const { return sign() > 0; }

    // lambda is a real parameter, so conjugation is the identity on R.
    BaseRingElement conjugate() const { return *this; }

    // Evaluation at lambda = 0, as a rational-variant element.
    BaseRingElement at_zero() const { return BaseRingElement(coeff(0)); }

    BaseRingElement to_variant(RingVariant v) const {
        if (v == variant_) return *this;
        std::vector<Rat> c = coeffs_;
        return from_coeffs(std::move(c), v);
    }

    friend BaseRingElement operator+(const BaseRingElement& a, const BaseRingElement& b) {
        a.require_same_variant(b, "+");
        std::vector<Rat> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Rat(0));
        for (std::size_t r = 0; r < a.coeffs_.size(); ++r) c[r] = a.coeffs_[r];
        for (std::size_t r = 0; r < b.coeffs_.size(); ++r) c[r] += b.coeffs_[r];
        return from_coeffs(std::move(c), a.variant_);
    }

    friend BaseRingElement operator-(const BaseRingElement& a, const BaseRingElement& b) {
        a.require_same_variant(b, "-");
        std::vector<Rat> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Rat(0));
        for (std::size_t r = 0; r < a.coeffs_.size(); ++r) c[r] = a.coeffs_[r];
        for (std::size_t r = 0; r < b.coeffs_.size(); ++r) c[r] -= b.coeffs_[r];
        return from_coeffs(std::move(c), a.variant_);
    }

    BaseRingElement operator-() const {
        BaseRingElement e(variant_);
        e.coeffs_ = coeffs_;
        for (auto& c : e.coeffs_) c = -c;
        return e;
    }

    friend BaseRingElement operator*(const BaseRingElement& a, const BaseRingElement& b) {
        a.require_same_variant(b, "*");
        if (a.is_zero() || b.is_zero()) return BaseRingElement(a.variant_);
        std::vector<Rat> c(a.coeffs_.size() + b.coeffs_.size() - 1, Rat(0));
        for (std::size_t r = 0; r < a.coeffs_.size(); ++r) {
            if (a.coeffs_[r] == 0) continue;
            for (std::size_t s = 0; s < b.coeffs_.size(); ++s)
                c[r + s] += a.coeffs_[r] * b.coeffs_[s];
        }
        return from_coeffs(std::move(c), a.variant_);
    }

    BaseRingElement& operator+=(const BaseRingElement& b) { return *this = *this + b; }
    BaseRingElement& operator-=(const BaseRingElement& b) { return *this = *this - b; }
    BaseRingElement& operator*=(const BaseRingElement& b) { return *this = *this * b; }

    friend bool operator==(const BaseRingElement& a, const BaseRingElement& b) {
        a.require_same_variant(b, "==");
        return a.coeffs_ == b.coeffs_;
    }

    friend bool operator!=(const BaseRingElement& a, const BaseRingElement& b) { return !(a == b); }

private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
    }

    void require_same_variant(const BaseRingElement& b, const char* op) const {
        if (variant_ != b.variant_)
            throw std::invalid_argument(std::string("BaseRingElement: variant mismatch in '") +
                                        op + "' (" + variant_name(variant_) + " vs " +
                                        variant_name(b.variant_) + ")");
    }

    RingVariant variant_;
    std::vector<Rat> coeffs_;
};

// Total order induced by the positivity rule: compare(a, b) = sign(a - b).
inline int compare(const BaseRingElement& a, const BaseRingElement& b) {
    return (a - b).sign();
}

}  // namespace starmod
