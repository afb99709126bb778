#pragma once

#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "scalar.hpp"

namespace starmod {

namespace detail {

// Shared tokenizer for scalar and element literals.  'l' is the formal
// parameter lambda; 'i' is the imaginary unit; other identifiers are basis
// labels (only meaningful for element literals).
struct LitToken {
    enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End } kind;
    std::string text;
    std::size_t pos;
};

inline std::vector<LitToken> lex_literal(const std::string& s) {
    std::vector<LitToken> out;
    std::size_t p = 0;
    while (p < s.size()) {
        char c = s[p];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++p;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t q = p;
            while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q]))) ++q;
            out.push_back({LitToken::Number, s.substr(p, q - p), p});
            p = q;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t q = p;
            while (q < s.size() && (std::isalnum(static_cast<unsigned char>(s[q])) || s[q] == '_'))
                ++q;
            std::string word = s.substr(p, q - p);
            // A run consisting only of 'i' and 'l' is a juxtaposed product of
            // the imaginary unit and lambda ("il^2"); labels may not collide.
            bool pure_il = true;
            for (char w : word)
                if (w != 'i' && w != 'l') pure_il = false;
            if (pure_il) {
                for (std::size_t r = 0; r < word.size(); ++r)
                    out.push_back({LitToken::Ident, std::string(1, word[r]), p + r});
            } else {
                out.push_back({LitToken::Ident, std::move(word), p});
            }
            p = q;
            continue;
        }
        LitToken::Kind k;
        switch (c) {
            case '+': k = LitToken::Plus; break;
            case '-': k = LitToken::Minus; break;
            case '*': k = LitToken::Star; break;
            case '/': k = LitToken::Slash; break;
            case '^': k = LitToken::Caret; break;
            case '(': k = LitToken::LParen; break;
            case ')': k = LitToken::RParen; break;
            default:
                throw std::invalid_argument("literal: unexpected character '" +
                                            std::string(1, c) + "' at position " +
                                            std::to_string(p));
        }
        out.push_back({k, std::string(1, c), p});
        ++p;
    }
    out.push_back({LitToken::End, "", s.size()});
    return out;
}

// Recursive-descent parser for scalar expressions over {rational, i, l} with
// +, -, juxtaposition or * for products, ^ for nonnegative integer powers,
// and / restricted to exact scalar division (rational literals in practice).
class ScalarParser {
public:
    ScalarParser(const std::vector<LitToken>& toks, RingVariant v) : toks_(toks), v_(v) {}

    Scalar parse() {
        Scalar r = expr();
        expect(LitToken::End, "end of input");
        return r;
    }

private:
    const LitToken& cur() const { return toks_[i_]; }

    void advance() { ++i_; }

    void expect(LitToken::Kind k, const char* what) {
        if (cur().kind != k)
            throw std::invalid_argument("literal: expected " + std::string(what) +
                                        " at position " + std::to_string(cur().pos));
        if (k != LitToken::End) advance();
    }

    Scalar expr() {
        int sign = 1;
        if (cur().kind == LitToken::Plus || cur().kind == LitToken::Minus) {
            if (cur().kind == LitToken::Minus) sign = -1;
            advance();
        }
        Scalar acc = term();
        if (sign < 0) acc = -acc;
        while (cur().kind == LitToken::Plus || cur().kind == LitToken::Minus) {
            bool minus = cur().kind == LitToken::Minus;
            advance();
            Scalar t = term();
            acc = minus ? acc - t : acc + t;
        }
        return acc;
    }

    bool starts_factor() const {
        switch (cur().kind) {
            case LitToken::Number:
            case LitToken::Ident:
            case LitToken::LParen: return true;
            default: return false;
        }
    }

    Scalar term() {
        Scalar acc = factor();
        for (;;) {
            if (cur().kind == LitToken::Star) {
                advance();
                acc *= factor();
            } else if (cur().kind == LitToken::Slash) {
                advance();
                Scalar d = factor();
                auto q = Scalar::divide_exact(acc, d);
                if (!q)
                    throw std::invalid_argument("literal: inexact division at position " +
                                                std::to_string(cur().pos));
                acc = *q;
            } else if (starts_factor()) {
                acc *= factor();
            } else {
                return acc;
            }
        }
    }

    Scalar factor() {
        Scalar a = atom();
        if (cur().kind == LitToken::Caret) {
            advance();
            if (cur().kind != LitToken::Number)
                throw std::invalid_argument("literal: expected integer exponent at position " +
                                            std::to_string(cur().pos));
            long e = std::stol(cur().text);
            advance();
            Scalar r = Scalar::one(v_);
            for (long k = 0; k < e; ++k) r *= a;
            return r;
        }
        return a;
    }

    Scalar atom() {
        switch (cur().kind) {
            case LitToken::Number: {
                Rat n(cur().text);
                advance();
                return Scalar(n, v_);
            }
            case LitToken::Ident: {
                if (cur().text == "i") {
                    advance();
                    return Scalar::i_unit(v_);
                }
                if (cur().text == "l") {
                    advance();
                    return Scalar::lambda(1, v_);
                }
                throw std::invalid_argument("literal: unknown symbol '" + cur().text +
                                            "' at position " + std::to_string(cur().pos));
            }
            case LitToken::LParen: {
                advance();
                Scalar r = expr();
                expect(LitToken::RParen, "')'");
                return r;
            }
            default:
                throw std::invalid_argument("literal: unexpected token at position " +
                                            std::to_string(cur().pos));
        }
    }

    const std::vector<LitToken>& toks_;
    RingVariant v_;
    std::size_t i_ = 0;
};

inline std::string rat_str(const Rat& q) {
    std::ostringstream os;
    os << numerator(q);
    if (denominator(q) != 1) os << "/" << denominator(q);
    return os.str();
}

inline bool rat_is_integer(const Rat& q) { return denominator(q) == 1; }

// Coefficient rendering for juxtaposition with i / l: integers are bare,
// fractions are parenthesized so the result re-parses as one product.
inline std::string coeff_str(const Rat& q) {
    return rat_is_integer(q) ? rat_str(q) : "(" + rat_str(q) + ")";
}

}  // namespace detail

inline Scalar parse_scalar(const std::string& text) {
    bool has_lambda = false;
    auto toks = detail::lex_literal(text);
    for (const auto& t : toks)
        if (t.kind == detail::LitToken::Ident && t.text == "l") has_lambda = true;
    RingVariant v = has_lambda ? RingVariant::lambda_poly : RingVariant::rational;
    return detail::ScalarParser(toks, v).parse();
}

inline Scalar parse_scalar(const std::string& text, RingVariant v) {
    return detail::ScalarParser(detail::lex_literal(text), v).parse();
}

// Canonical printer; parse_scalar(print_scalar(s), s.variant()) == s.
inline std::string print_scalar(const Scalar& s) {
    using detail::coeff_str;
    using detail::rat_str;
    if (s.is_zero()) return "0";

    struct Term {
        int sign;
        std::string body;
    };
    std::vector<Term> terms;

    auto lvar = [](int r) -> std::string {
        if (r == 0) return "";
        if (r == 1) return "l";
        return "l^" + std::to_string(r);
    };
    auto imag_body = [&](const Rat& b, int r) {
        Rat ab = abs(b);
        return (ab == 1 ? std::string("i") : coeff_str(ab) + "i") + lvar(r);
    };

    int deg = std::max(s.re().degree(), s.im().degree());
    for (int r = 0; r <= deg; ++r) {
        Rat a = s.re().coeff(r);
        Rat b = s.im().coeff(r);
        if (a == 0 && b == 0) continue;
        if (r == 0) {
            if (a != 0) terms.push_back({a > 0 ? 1 : -1, rat_str(abs(a))});
            if (b != 0) terms.push_back({b > 0 ? 1 : -1, imag_body(b, 0)});
            continue;
        }
        if (b == 0) {
            Rat aa = abs(a);
            std::string body = (aa == 1 ? "" : coeff_str(aa)) + lvar(r);
            terms.push_back({a > 0 ? 1 : -1, body});
        } else if (a == 0) {
            terms.push_back({b > 0 ? 1 : -1, imag_body(b, r)});
        } else {
            // Mixed complex coefficient: factor the sign of the real part.
            int sg = a > 0 ? 1 : -1;
            Rat aa = abs(a);
            Rat bb = sg > 0 ? b : Rat(-b);
            std::string inner = rat_str(aa) + (bb > 0 ? " + " : " - ") + imag_body(abs(bb), 0);
            terms.push_back({sg, "(" + inner + ")" + lvar(r)});
        }
    }

    std::string out;
    for (std::size_t k = 0; k < terms.size(); ++k) {
        if (k == 0) {
            if (terms[k].sign < 0) out += "-";
        } else {
            out += terms[k].sign < 0 ? " - " : " + ";
        }
        out += terms[k].body;
    }
    return out;
}

}  // namespace starmod
