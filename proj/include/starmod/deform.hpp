#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morita.hpp"

namespace starmod {

/**
 * Polynomial observable in x_1..x_n, p_1..p_n with Scalar coefficients over
 * the series ring.  Exponent vectors have length 2n, positions first.  The
 * map keeps monomials in a canonical order and never stores zero terms.
 */
struct PolyObservable {
    int vars = 1;
    RingVariant variant = RingVariant::lambda_poly;
    std::map<std::vector<int>, Scalar> terms;

    PolyObservable() = default;
    explicit PolyObservable(int n, RingVariant v = RingVariant::lambda_poly)
        : vars(n), variant(v) {}

    bool is_zero() const { return terms.empty(); }

    int degree() const {
        int d = 0;
        for (const auto& [m, c] : terms) {
            int t = 0;
            for (int e : m) t += e;
            d = std::max(d, t);
        }
        return d;
    }

    PolyObservable& add_term(std::vector<int> mono, Scalar c) {
        if (static_cast<int>(mono.size()) != 2 * vars)
            throw std::invalid_argument("PolyObservable: exponent vector has wrong length");
        auto it = terms.find(mono);
        if (it == terms.end()) {
            if (!c.is_zero()) terms.emplace(std::move(mono), std::move(c));
        } else {
            it->second += c;
            if (it->second.is_zero()) terms.erase(it);
        }
        return *this;
    }

    friend PolyObservable operator+(PolyObservable a, const PolyObservable& b) {
        for (const auto& [m, c] : b.terms) a.add_term(m, c);
        return a;
    }
    friend PolyObservable operator-(PolyObservable a, const PolyObservable& b) {
        for (const auto& [m, c] : b.terms) a.add_term(m, Scalar::zero(b.variant) - c);
        return a;
    }
    friend PolyObservable operator*(const Scalar& s, PolyObservable a) {
        PolyObservable r(a.vars, a.variant);
        for (auto& [m, c] : a.terms) r.add_term(m, s * c);
        return r;
    }
    friend PolyObservable operator*(const PolyObservable& a, const PolyObservable& b) {
        PolyObservable r(a.vars, a.variant);
        for (const auto& [ma, ca] : a.terms)
            for (const auto& [mb, cb] : b.terms) {
                std::vector<int> m = ma;
                for (std::size_t t = 0; t < m.size(); ++t) m[t] += mb[t];
                r.add_term(std::move(m), ca * cb);
            }
        return r;
    }
    friend bool operator==(const PolyObservable& a, const PolyObservable& b) {
        return a.vars == b.vars && a.terms == b.terms;
    }

    PolyObservable conj() const {
        PolyObservable r(vars, variant);
        for (const auto& [m, c] : terms) r.add_term(m, c.conj());
        return r;
    }

    // d/d(variable v), v in [0, 2*vars).
    PolyObservable derivative(int v) const {
        PolyObservable r(vars, variant);
        for (const auto& [m, c] : terms) {
            if (m[static_cast<std::size_t>(v)] == 0) continue;
            std::vector<int> d = m;
            int e = d[static_cast<std::size_t>(v)]--;
            r.add_term(std::move(d), Scalar(Rat(e), variant) * c);
        }
        return r;
    }

    PolyObservable derivative(const std::vector<int>& multi) const {
        PolyObservable r = *this;
        for (std::size_t v = 0; v < multi.size(); ++v)
            for (int t = 0; t < multi[v] && !r.is_zero(); ++t)
                r = r.derivative(static_cast<int>(v));
        return r;
    }

    // Coefficient of lambda^j as a series-ring polynomial with constant
    // coefficients.
    PolyObservable lambda_layer(int j) const {
        PolyObservable r(vars, variant);
        for (const auto& [m, c] : terms) {
            auto [cr, ci] = c.coeff(j);
            Scalar layer = Scalar(BaseRingElement(cr, variant), BaseRingElement(ci, variant));
            r.add_term(m, layer);
        }
        return r;
    }

    PolyObservable truncate_lambda(int n) const {
        PolyObservable r(vars, variant);
        for (int j = 0; j <= n; ++j) {
            PolyObservable layer = lambda_layer(j);
            for (const auto& [m, c] : layer.terms) r.add_term(m, Scalar::lambda(j, variant) * c);
        }
        return r;
    }

    static PolyObservable monomial(int vars, std::vector<int> exps,
                                   RingVariant v = RingVariant::lambda_poly) {
        PolyObservable r(vars, v);
        r.add_term(std::move(exps), Scalar::one(v));
        return r;
    }

    static PolyObservable variable(int vars, int v, RingVariant rv = RingVariant::lambda_poly) {
        std::vector<int> e(static_cast<std::size_t>(2 * vars), 0);
        e[static_cast<std::size_t>(v)] = 1;
        return monomial(vars, std::move(e), rv);
    }
};

inline std::string print_poly(const PolyObservable& f) {
    if (f.is_zero()) return "0";
    std::string out;
    for (const auto& [m, c] : f.terms) {
        if (!out.empty()) out += " + ";
        std::string mono;
        for (int v = 0; v < 2 * f.vars; ++v) {
            int e = m[static_cast<std::size_t>(v)];
            if (e == 0) continue;
            if (!mono.empty()) mono += "*";
            mono += (v < f.vars ? "x" : "p");
            if (f.vars > 1) mono += std::to_string((v % f.vars) + 1);
            if (e > 1) mono += "^" + std::to_string(e);
        }
        if (mono.empty()) mono = "1";
        out += "(" + print_scalar(c) + ")*" + mono;
    }
    return out;
}

inline std::vector<std::vector<int>> monomials_up_to(int vars, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(2 * vars), 0);
    auto rec = [&](auto&& self, int pos, int left) -> void {
        if (pos == 2 * vars) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= left; ++e) {
            cur[static_cast<std::size_t>(pos)] = e;
            self(self, pos + 1, left - e);
        }
        cur[static_cast<std::size_t>(pos)] = 0;
    };
    rec(rec, 0, degree);
    return out;
}

// One term coeff * (d^df f) * (d^dg g) of a bidifferential operator.
struct BidiffTerm {
    std::vector<int> df;
    std::vector<int> dg;
    Scalar coeff;
};

using Bidiff = std::vector<BidiffTerm>;

inline PolyObservable apply_bidiff(const Bidiff& op, const PolyObservable& f,
                                   const PolyObservable& g) {
    PolyObservable r(f.vars, f.variant);
    for (const auto& t : op) {
        PolyObservable a = f.derivative(t.df);
        if (a.is_zero()) continue;
        PolyObservable b = g.derivative(t.dg);
        if (b.is_zero()) continue;
        r = r + t.coeff * (a * b);
    }
    return r;
}

/**
 * Truncated star product: f * g = fg + sum_{r=1}^{order} lambda^r C_r(f, g).
 * The classical cochain is implicit; poisson stores the antisymmetric part
 * normalization target, C_1(f,g) - C_1(g,f) = i P(f,g).
 */
struct StarProduct {
    int vars = 1;
    int order = 0;
    std::vector<Bidiff> cochains;
    Bidiff poisson;
};

inline Bidiff poisson_bidiff(int vars, RingVariant v = RingVariant::lambda_poly) {
    Bidiff out;
    for (int i = 0; i < vars; ++i) {
        std::vector<int> dx(static_cast<std::size_t>(2 * vars), 0);
        std::vector<int> dp(static_cast<std::size_t>(2 * vars), 0);
        dx[static_cast<std::size_t>(i)] = 1;
        dp[static_cast<std::size_t>(vars + i)] = 1;
        out.push_back({dx, dp, Scalar::one(v)});
        out.push_back({dp, dx, Scalar::zero(v) - Scalar::one(v)});
    }
    return out;
}

namespace detail {

inline void bidiff_merge(Bidiff& op) {
    std::map<std::pair<std::vector<int>, std::vector<int>>, Scalar> acc;
    for (auto& t : op) {
        auto key = std::make_pair(t.df, t.dg);
        auto it = acc.find(key);
        if (it == acc.end())
            acc.emplace(std::move(key), t.coeff);
        else
            it->second += t.coeff;
    }
    op.clear();
    for (auto& [k, c] : acc)
        if (!c.is_zero()) op.push_back({k.first, k.second, c});
}

inline Rat factorial(int n) {
    Rat r(1);
    for (int t = 2; t <= n; ++t) r *= t;
    return r;
}

inline Rat binomial(int n, int k) {
    if (k < 0 || k > n) return Rat(0);
    return factorial(n) / (factorial(k) * factorial(n - k));
}

}  // namespace detail

/**
 * Weyl ordered star product on the flat phase space: C_r = (i/2)^r / r! times
 * the r-th power of the Poisson bidifferential, expanded multinomially over
 * the 2n commuting derivation pairs.
 */
inline StarProduct moyal_star(int vars, int order, RingVariant v = RingVariant::lambda_poly) {
    if (vars <= 0 || order < 0) throw std::invalid_argument("moyal_star: bad shape");
    StarProduct s;
    s.vars = vars;
    s.order = order;
    s.poisson = poisson_bidiff(vars, v);
    const int nsym = 2 * vars;
    Scalar iu = Scalar::i_unit(v);
    for (int r = 1; r <= order; ++r) {
        // (i/2)^r
        Scalar pref = Scalar(Rat(1, 2), v) * iu;
        Scalar scale = Scalar::one(v);
        for (int t = 0; t < r; ++t) scale *= pref;
        Bidiff cr;
        std::vector<int> k(static_cast<std::size_t>(nsym), 0);
        auto rec = [&](auto&& self, int pos, int left) -> void {
            if (pos == nsym) {
                if (left != 0) return;
                std::vector<int> df(static_cast<std::size_t>(nsym), 0);
                std::vector<int> dg(static_cast<std::size_t>(nsym), 0);
                Rat denom(1);
                int sign_flips = 0;
                for (int j = 0; j < nsym; ++j) {
                    int kj = k[static_cast<std::size_t>(j)];
                    if (kj == 0) continue;
                    denom *= detail::factorial(kj);
                    int i = j % vars;
                    bool swapped = j >= vars;
                    if (swapped) sign_flips += kj;
                    df[static_cast<std::size_t>(swapped ? vars + i : i)] += kj;
                    dg[static_cast<std::size_t>(swapped ? i : vars + i)] += kj;
                }
                Scalar coeff = scale * Scalar(Rat(sign_flips % 2 ? -1 : 1) / denom, v);
                cr.push_back({std::move(df), std::move(dg), std::move(coeff)});
                return;
            }
            for (int e = 0; e <= left; ++e) {
                k[static_cast<std::size_t>(pos)] = e;
                self(self, pos + 1, left - e);
            }
            k[static_cast<std::size_t>(pos)] = 0;
        };
        rec(rec, 0, r);
        s.cochains.push_back(std::move(cr));
    }
    return s;
}

inline PolyObservable star_apply(const StarProduct& s, const PolyObservable& f,
                                 const PolyObservable& g) {
    if (f.vars != s.vars || g.vars != s.vars)
        throw std::invalid_argument("star_apply: variable counts differ");
    PolyObservable r = f * g;
    for (int j = 1; j <= s.order; ++j) {
        PolyObservable c = apply_bidiff(s.cochains[static_cast<std::size_t>(j - 1)], f, g);
        r = r + Scalar::lambda(j, f.variant) * c;
    }
    return r;
}

inline PolyObservable moyal_product(const PolyObservable& f, const PolyObservable& g, int order) {
    if (f.vars != g.vars) throw std::invalid_argument("moyal_product: variable counts differ");
    return star_apply(moyal_star(f.vars, order, f.variant), f, g);
}

/**
 * Axiom battery on all monomials up to degree_bound: unit, classical part,
 * associativity and the Hermitian identity modulo lambda^{N+1}, and the
 * normalization C_1(f,g) - C_1(g,f) = i P(f,g).
 */
inline CheckReport check_star_axioms(const StarProduct& s, int degree_bound, int n) {
    CheckReport rep;
    RingVariant v = RingVariant::lambda_poly;
    std::vector<PolyObservable> monos;
    for (auto& m : monomials_up_to(s.vars, degree_bound))
        monos.push_back(PolyObservable::monomial(s.vars, m, v));
    PolyObservable one = PolyObservable::monomial(
        s.vars, std::vector<int>(static_cast<std::size_t>(2 * s.vars), 0), v);
    Scalar iu = Scalar::i_unit(v);

    for (const auto& f : monos) {
        if (!(star_apply(s, one, f) == f) || !(star_apply(s, f, one) == f)) {
            rep.fail("unit: 1 * f != f for f = " + print_poly(f));
            break;
        }
    }
    for (const auto& f : monos) {
        bool bad = false;
        for (const auto& g : monos) {
            PolyObservable prod = star_apply(s, f, g);
            if (!(prod.lambda_layer(0) == (f * g).lambda_layer(0))) {
                rep.fail("classical part: (f*g)|_{lambda=0} != fg for f = " + print_poly(f) +
                         ", g = " + print_poly(g));
                bad = true;
                break;
            }
            if (!s.cochains.empty()) {
                PolyObservable c1 = apply_bidiff(s.cochains[0], f, g) -
                                    apply_bidiff(s.cochains[0], g, f);
                PolyObservable target = iu * apply_bidiff(s.poisson, f, g);
                if (!(c1 == target)) {
                    rep.fail("poisson normalization: C1 antisymmetrization differs from i{f,g}"
                             " for f = " +
                             print_poly(f) + ", g = " + print_poly(g));
                    bad = true;
                    break;
                }
            }
            PolyObservable h1 = star_apply(s, f.conj(), g.conj());
            if (!(star_apply(s, g, f).conj().truncate_lambda(n) == h1.truncate_lambda(n))) {
                rep.fail("hermitian: conj(g*f) != conj(f)*conj(g) for f = " + print_poly(f) +
                         ", g = " + print_poly(g));
                bad = true;
                break;
            }
        }
        if (bad) break;
    }
    bool assoc_ok = true;
    for (const auto& f : monos) {
        for (const auto& g : monos) {
            PolyObservable fg = star_apply(s, f, g);
            for (const auto& h : monos) {
                PolyObservable left = star_apply(s, fg, h);
                PolyObservable right = star_apply(s, f, star_apply(s, g, h));
                if (!(left.truncate_lambda(n) == right.truncate_lambda(n))) {
                    rep.fail("associativity: (f*g)*h != f*(g*h) mod lambda^" +
                             std::to_string(n + 1) + " for f = " + print_poly(f) + ", g = " +
                             print_poly(g) + ", h = " + print_poly(h));
                    assoc_ok = false;
                    break;
                }
            }
            if (!assoc_ok) break;
        }
        if (!assoc_ok) break;
    }
    return rep;
}

/**
 * Formal equivalence S = id + sum lambda^r S_r with constant-coefficient
 * differential stages annihilating constants.
 */
using DiffOp = std::map<std::vector<int>, Scalar>;

struct EquivalenceOperator {
    int vars = 1;
    int order = 0;
    std::vector<DiffOp> stages;
};

inline void validate_stages(const EquivalenceOperator& s) {
    if (static_cast<int>(s.stages.size()) != s.order)
        throw std::invalid_argument("equivalence operator: stage count differs from order");
    for (const auto& st : s.stages)
        for (const auto& [m, c] : st) {
            if (static_cast<int>(m.size()) != 2 * s.vars)
                throw std::invalid_argument("equivalence operator: bad multi-index length");
            int total = 0;
            for (int e : m) total += e;
            if (total == 0 && !c.is_zero())
                throw std::invalid_argument("equivalence operator: stage does not kill constants");
        }
}

inline PolyObservable apply_diffop(const DiffOp& op, const PolyObservable& f) {
    PolyObservable r(f.vars, f.variant);
    for (const auto& [m, c] : op) {
        PolyObservable d = f.derivative(m);
        if (!d.is_zero()) r = r + c * d;
    }
    return r;
}

inline PolyObservable apply_stages(const EquivalenceOperator& s, const PolyObservable& f) {
    PolyObservable r = f;
    for (int j = 1; j <= s.order; ++j)
        r = r + Scalar::lambda(j, f.variant) *
                    apply_diffop(s.stages[static_cast<std::size_t>(j - 1)], f);
    return r;
}

namespace detail {

inline DiffOp diffop_compose(const DiffOp& a, const DiffOp& b) {
    DiffOp out;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            std::vector<int> m = ma;
            for (std::size_t t = 0; t < m.size(); ++t) m[t] += mb[t];
            auto it = out.find(m);
            if (it == out.end())
                out.emplace(std::move(m), ca * cb);
            else
                it->second += ca * cb;
        }
    for (auto it = out.begin(); it != out.end();)
        it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

inline void diffop_sub(DiffOp& a, const DiffOp& b) {
    for (const auto& [m, c] : b) {
        auto it = a.find(m);
        if (it == a.end())
            a.emplace(m, Scalar::zero(c.variant()) - c);
        else {
            it->second -= c;
            if (it->second.is_zero()) a.erase(it);
        }
    }
}

}  // namespace detail

// Stage-wise Neumann inverse: T_r = -sum_{b=1}^{r} T_{r-b} S_b with T_0 = id.
inline EquivalenceOperator invert_equivalence(const EquivalenceOperator& s) {
    validate_stages(s);
    EquivalenceOperator t;
    t.vars = s.vars;
    t.order = s.order;
    for (int r = 1; r <= s.order; ++r) {
        DiffOp tr;
        for (int b = 1; b <= r; ++b) {
            const DiffOp& sb = s.stages[static_cast<std::size_t>(b - 1)];
            if (r - b == 0)
                detail::diffop_sub(tr, sb);
            else
                detail::diffop_sub(tr,
                                   detail::diffop_compose(t.stages[static_cast<std::size_t>(r - b - 1)], sb));
        }
        t.stages.push_back(std::move(tr));
    }
    return t;
}

/**
 * Transported product S(S^{-1}f * S^{-1}g) expanded back into cochain data:
 * post-composition with a stage distributes over the product by the Leibniz
 * rule, pre-composition just stacks derivatives on one slot.
 */
inline StarProduct apply_equivalence(const EquivalenceOperator& se, const StarProduct& s) {
    if (se.order != s.order) throw std::invalid_argument("apply_equivalence: orders differ");
    if (se.vars != s.vars) throw std::invalid_argument("apply_equivalence: variable counts differ");
    validate_stages(se);
    RingVariant v = RingVariant::lambda_poly;
    EquivalenceOperator t = invert_equivalence(se);

    const std::size_t nidx = static_cast<std::size_t>(2 * s.vars);
    Bidiff pointwise{{std::vector<int>(nidx, 0), std::vector<int>(nidx, 0), Scalar::one(v)}};

    auto precompose = [&](const Bidiff& c, const DiffOp* tf, const DiffOp* tg) {
        Bidiff out;
        for (const auto& term : c) {
            std::vector<std::pair<std::vector<int>, Scalar>> lefts, rights;
            if (tf)
                for (const auto& [m, cf] : *tf) lefts.emplace_back(m, cf);
            else
                lefts.emplace_back(std::vector<int>(nidx, 0), Scalar::one(v));
            if (tg)
                for (const auto& [m, cg] : *tg) rights.emplace_back(m, cg);
            else
                rights.emplace_back(std::vector<int>(nidx, 0), Scalar::one(v));
            for (const auto& [mf, cf] : lefts)
                for (const auto& [mg, cg] : rights) {
                    std::vector<int> df = term.df, dg = term.dg;
                    for (std::size_t i = 0; i < nidx; ++i) {
                        df[i] += mf[i];
                        dg[i] += mg[i];
                    }
                    out.push_back({std::move(df), std::move(dg), term.coeff * cf * cg});
                }
        }
        return out;
    };
    // S_a applied after the multiplication: Leibniz split of each d^delta.
    auto postcompose = [&](const DiffOp& sa, const Bidiff& c) {
        Bidiff out;
        for (const auto& [delta, cs] : sa) {
            std::vector<std::vector<int>> splits;
            std::vector<int> cur(nidx, 0);
            auto rec = [&](auto&& self, std::size_t pos) -> void {
                if (pos == nidx) {
                    splits.push_back(cur);
                    return;
                }
                for (int e = 0; e <= delta[pos]; ++e) {
                    cur[pos] = e;
                    self(self, pos + 1);
                }
                cur[pos] = 0;
            };
            rec(rec, 0);
            for (const auto& eps : splits) {
                Rat binom(1);
                for (std::size_t i = 0; i < nidx; ++i)
                    binom *= detail::binomial(delta[i], eps[i]);
                Scalar factor = cs * Scalar(binom, v);
                for (const auto& term : c) {
                    std::vector<int> df = term.df, dg = term.dg;
                    for (std::size_t i = 0; i < nidx; ++i) {
                        df[i] += eps[i];
                        dg[i] += delta[i] - eps[i];
                    }
                    out.push_back({std::move(df), std::move(dg), factor * term.coeff});
                }
            }
        }
        return out;
    };

    StarProduct out;
    out.vars = s.vars;
    out.order = s.order;
    out.poisson = s.poisson;
    for (int r = 1; r <= s.order; ++r) {
        Bidiff cr;
        for (int a = 0; a <= r; ++a)
            for (int b = 0; a + b <= r; ++b)
                for (int c = 0; a + b + c <= r; ++c) {
                    int d = r - a - b - c;
                    const Bidiff& base =
                        b == 0 ? pointwise : s.cochains[static_cast<std::size_t>(b - 1)];
                    const DiffOp* tf =
                        c == 0 ? nullptr : &t.stages[static_cast<std::size_t>(c - 1)];
                    const DiffOp* tg =
                        d == 0 ? nullptr : &t.stages[static_cast<std::size_t>(d - 1)];
                    Bidiff piece = precompose(base, tf, tg);
                    if (a > 0) piece = postcompose(se.stages[static_cast<std::size_t>(a - 1)], piece);
                    cr.insert(cr.end(), piece.begin(), piece.end());
                }
        detail::bidiff_merge(cr);
        out.cochains.push_back(std::move(cr));
    }
    return out;
}

/**
 * Linear functional on polynomial observables, stored by monomial values;
 * lambda-linear, so series coefficients multiply through.
 */
struct FormalFunctional {
    int vars = 1;
    std::map<std::vector<int>, Scalar> values;

    Scalar operator()(const PolyObservable& f) const {
        Scalar out = Scalar::zero(f.variant);
        for (const auto& [m, c] : f.terms) {
            auto it = values.find(m);
            if (it == values.end())
                throw std::invalid_argument("formal functional undefined on monomial " +
                                            print_poly(PolyObservable::monomial(vars, m, f.variant)));
            out += c * it->second;
        }
        return out;
    }
};

// Moments of the standard product Gaussian: E[t^k] = (k-1)!! for even k.
inline FormalFunctional gaussian_moment_functional(int vars, int max_degree,
                                                   RingVariant v = RingVariant::lambda_poly) {
    FormalFunctional out;
    out.vars = vars;
    for (auto& m : monomials_up_to(vars, max_degree)) {
        Rat val(1);
        bool odd = false;
        for (int e : m) {
            if (e % 2 != 0) {
                odd = true;
                break;
            }
            for (int t = e - 1; t >= 1; t -= 2) val *= t;
        }
        out.values.emplace(std::move(m), odd ? Scalar::zero(v) : Scalar(val, v));
    }
    return out;
}

inline FormalFunctional origin_functional(int vars, int max_degree,
                                          RingVariant v = RingVariant::lambda_poly) {
    FormalFunctional out;
    out.vars = vars;
    for (auto& m : monomials_up_to(vars, max_degree)) {
        bool constant = true;
        for (int e : m) constant = constant && e == 0;
        out.values.emplace(std::move(m), constant ? Scalar::one(v) : Scalar::zero(v));
    }
    return out;
}

// Spanning family for positivity checks: monomials of degree <= d and their
// pairwise sums f +/- g, f +/- i g.
inline std::vector<PolyObservable> positivity_family(int vars, int degree,
                                                     RingVariant v = RingVariant::lambda_poly) {
    std::vector<PolyObservable> base;
    for (auto& m : monomials_up_to(vars, degree)) base.push_back(PolyObservable::monomial(vars, m, v));
    std::vector<PolyObservable> out = base;
    Scalar iu = Scalar::i_unit(v);
    Scalar minus = Scalar::zero(v) - Scalar::one(v);
    for (std::size_t a = 0; a < base.size(); ++a)
        for (std::size_t b = a + 1; b < base.size(); ++b) {
            out.push_back(base[a] + base[b]);
            out.push_back(base[a] + minus * base[b]);
            out.push_back(base[a] + iu * base[b]);
            out.push_back(base[a] + (minus * iu) * base[b]);
        }
    return out;
}

struct FormalPositivity {
    bool positive = false;
    int tested = 0;
    std::optional<PolyObservable> witness;
    std::optional<Scalar> value;
    std::string detail;
};

namespace detail {

inline Scalar truncate_scalar(const Scalar& x, int n) {
    RingVariant v = x.re().variant();
    Scalar out = Scalar::zero(v);
    for (int j = 0; j <= n; ++j) {
        auto [cr, ci] = x.coeff(j);
        out += Scalar::lambda(j, v) * Scalar(BaseRingElement(cr, v), BaseRingElement(ci, v));
    }
    return out;
}

}  // namespace detail

// omega(conj(f) * f) >= 0 in the ordered series ring over the spanning
// family, modulo lambda^(n+1); a violation is returned with its witness.
inline FormalPositivity formal_positive(const FormalFunctional& omega, const StarProduct& s,
                                        int test_degree, int n) {
    if (omega.vars != s.vars)
        throw std::invalid_argument("formal_positive: variable counts differ");
    FormalPositivity out;
    for (const auto& f : positivity_family(s.vars, test_degree)) {
        ++out.tested;
        Scalar val = detail::truncate_scalar(omega(star_apply(s, f.conj(), f)), n);
        bool ok = val.is_zero() || (val.is_real() && val.re().is_positive());
        if (!ok) {
            out.positive = false;
            out.witness = f;
            out.value = val;
            out.detail = val.is_real() ? "negative value " + print_scalar(val)
                                       : "non-real value " + print_scalar(val);
            return out;
        }
    }
    out.positive = true;
    return out;
}

struct LiftResult {
    FormalFunctional lift;
    std::vector<FormalFunctional> corrections;
    bool budget_exhausted = false;
    std::string detail;
};

/**
 * Order-by-order positive lift of a classically positive functional.  The
 * stage criterion is coefficientwise: every tested omega(conj(f) * f) keeps
 * all lambda-coefficients through the current order nonnegative.  Stage r
 * tries the zero correction first, then scales the Gaussian moment
 * functional, whose pairing with every tested classical square is strictly
 * positive; the minimal admissible rational scale is exact.
 */
inline LiftResult deform_functional(const FormalFunctional& omega0, const StarProduct& s, int n,
                                    int test_degree) {
    if (omega0.vars != s.vars)
        throw std::invalid_argument("deform_functional: variable counts differ");
    RingVariant v = RingVariant::lambda_poly;
    std::vector<PolyObservable> family = positivity_family(s.vars, test_degree, v);
    FormalFunctional gauss = gaussian_moment_functional(s.vars, 2 * test_degree, v);
    for (const auto& m : monomials_up_to(s.vars, 2 * test_degree))
        if (omega0.values.find(m) == omega0.values.end())
            throw std::invalid_argument(
                "deform_functional: base functional undefined on monomial " +
                print_poly(PolyObservable::monomial(s.vars, m, v)));

    // Lambda layers of every tested square.
    std::vector<std::vector<PolyObservable>> layers;
    layers.reserve(family.size());
    for (const auto& f : family) {
        PolyObservable sq = star_apply(s, f.conj(), f);
        std::vector<PolyObservable> l;
        for (int j = 0; j <= n; ++j) l.push_back(sq.lambda_layer(j));
        layers.push_back(std::move(l));
    }

    auto real_rat = [](const Scalar& x, Rat& out) {
        if (!x.is_real() || x.re().degree() > 0) return false;
        out = x.re().coeff(0);
        return true;
    };

    for (std::size_t t = 0; t < family.size(); ++t) {
        Scalar v0 = omega0(layers[t][0]);
        Rat r0;
        if (!real_rat(v0, r0) || r0 < 0)
            throw std::invalid_argument("deform_functional: not classically positive at f = " +
                                        print_poly(family[t]));
    }

    LiftResult out;
    std::vector<FormalFunctional> stages{omega0};
    for (int r = 1; r <= n; ++r) {
        Rat needed(0);
        bool feasible = true;
        std::string blocker;
        for (std::size_t t = 0; t < family.size(); ++t) {
            Scalar known = Scalar::zero(v);
            for (int j = 1; j <= r; ++j) known += stages[static_cast<std::size_t>(r - j)](layers[t][static_cast<std::size_t>(j)]);
            Rat b;
            if (!real_rat(known, b)) {
                feasible = false;
                blocker = "non-real contribution at order " + std::to_string(r) + " for f = " +
                          print_poly(family[t]);
                break;
            }
            if (b >= 0) continue;
            Rat a;
            if (!real_rat(gauss(layers[t][0]), a) || a <= 0) {
                feasible = false;
                blocker = "no positive search direction at f = " + print_poly(family[t]);
                break;
            }
            Rat ratio = -b / a;
            if (ratio > needed) needed = ratio;
        }
        if (!feasible) {
            out.budget_exhausted = true;
            out.detail = blocker;
            return out;
        }
        FormalFunctional wr;
        wr.vars = s.vars;
        Scalar scale = Scalar(needed, v);
        for (const auto& [m, val] : gauss.values) wr.values.emplace(m, scale * val);
        out.corrections.push_back(wr);
        stages.push_back(std::move(wr));
    }

    out.lift.vars = s.vars;
    for (const auto& [m, val] : gauss.values) {
        Scalar total = Scalar::zero(v);
        for (int r = 0; r <= n; ++r) {
            auto it = stages[static_cast<std::size_t>(r)].values.find(m);
            if (it == stages[static_cast<std::size_t>(r)].values.end()) {
                if (r == 0)
                    throw std::invalid_argument(
                        "deform_functional: base functional undefined on a tested monomial");
                continue;
            }
            total += Scalar::lambda(r, v) * it->second;
        }
        out.lift.values.emplace(m, total);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classical limit: lambda = 0 everywhere, with recertification for arrows.
// ---------------------------------------------------------------------------

namespace detail {

inline Scalar scalar_cl(const Scalar& x, RingVariant v) {
    auto [cr, ci] = x.coeff(0);
    return Scalar(BaseRingElement(cr, v), BaseRingElement(ci, v));
}

}  // namespace detail

inline PolyObservable classical_limit(const PolyObservable& f) {
    return f.lambda_layer(0);
}

inline StarProduct classical_limit(const StarProduct& s) {
    StarProduct out;
    out.vars = s.vars;
    out.order = 0;
    out.poisson = s.poisson;
    for (auto& t : out.poisson) t.coeff = detail::scalar_cl(t.coeff, RingVariant::lambda_poly);
    return out;
}

inline FormalFunctional classical_limit(const FormalFunctional& w) {
    FormalFunctional out;
    out.vars = w.vars;
    for (const auto& [m, c] : w.values)
        out.values.emplace(m, detail::scalar_cl(c, RingVariant::lambda_poly));
    return out;
}

inline AlgebraPtr classical_limit(const AlgebraPtr& alg) {
    if (alg->variant != RingVariant::lambda_poly)
        throw std::invalid_argument("classical_limit: scalars are not a series ring");
    static std::map<const AlgebraPresentation*, AlgebraPtr> memo;
    auto it = memo.find(alg.get());
    if (it != memo.end()) return it->second;
    RingVariant v = alg->variant;
    auto out = AlgebraPresentation::create();
    out->display_name = alg->display_name + " at lambda 0";
    out->variant = v;
    out->dim = alg->dim;
    out->labels = alg->labels;
    out->structure.assign(alg->structure.size(), {});
    for (std::size_t t = 0; t < alg->structure.size(); ++t)
        for (const auto& [idx, c] : alg->structure[t]) {
            Scalar cc = detail::scalar_cl(c, v);
            if (!cc.is_zero()) out->structure[t].push_back({idx, cc});
        }
    out->involution = SMat(alg->dim, alg->dim, Scalar::zero(v));
    for (int i = 0; i < alg->dim; ++i)
        for (int j = 0; j < alg->dim; ++j)
            out->involution.at(i, j) = detail::scalar_cl(alg->involution.at(i, j), v);
    if (alg->unit) {
        SVec u;
        for (const auto& c : *alg->unit) u.push_back(detail::scalar_cl(c, v));
        out->unit = std::move(u);
    }
    for (const auto& blk : alg->blocks) {
        AlgebraPresentation::Block nb{blk.size, {}};
        for (const auto& im : blk.images) {
            SMat m(blk.size, blk.size, Scalar::zero(v));
            for (int i = 0; i < blk.size; ++i)
                for (int j = 0; j < blk.size; ++j) m.at(i, j) = detail::scalar_cl(im.at(i, j), v);
            nb.images.push_back(std::move(m));
        }
        out->blocks.push_back(std::move(nb));
    }
    out->class_desc = alg->class_desc;
    memo.emplace(alg.get(), out);
    return out;
}

namespace detail {

inline AlgebraElement element_cl(const AlgebraPtr& target, const AlgebraElement& x) {
    SVec coords;
    for (const auto& c : x.coords()) coords.push_back(scalar_cl(c, target->variant));
    return AlgebraElement(target, std::move(coords));
}

inline AMat amat_cl(const AlgebraPtr& target, const AMat& m) {
    AMat out = amat_zero(target, m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out.at(i, j) = element_cl(target, m.at(i, j));
    return out;
}

}  // namespace detail

inline ModulePtr classical_limit(const ModulePtr& m) {
    AlgebraPtr a = classical_limit(m->algebra);
    return InnerProductModule::create(a, detail::amat_cl(a, m->gram),
                                      m->display_name + " at lambda 0");
}

inline Bimodule classical_limit(const Bimodule& bm) {
    AlgebraPtr b = classical_limit(bm.left_rep.algebra);
    ModulePtr m = classical_limit(bm.module);
    Representation rep{b, m, {}};
    for (const auto& im : bm.left_rep.images) rep.images.push_back(detail::amat_cl(m->algebra, im));
    return Bimodule{b, m->algebra, m, std::move(rep), detail::amat_cl(b, bm.left_gram)};
}

inline Functional classical_limit(const Functional& w) {
    AlgebraPtr a = classical_limit(w.algebra());
    SVec vals;
    for (const auto& c : w.values()) vals.push_back(detail::scalar_cl(c, a->variant));
    return Functional(a, std::move(vals));
}

inline PicardArrow classical_limit(const PicardArrow& arrow) {
    return make_arrow(classical_limit(arrow.bimodule), arrow.level, true);
}

}  // namespace starmod
