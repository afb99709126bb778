#include <catch2/catch_amalgamated.hpp>

#include <starmod/morita.hpp>

#include "helpers.hpp"

using namespace starmod;

namespace {

// 2x2 matrix units with the involution twisted by eta = diag(1,-1):
// b -> eta b^dagger eta.  A legitimate involutive algebra, but -E22 is the
// square E12^* E12, so no faithful involution-compatible block exists and
// none is attached.
AlgebraPtr twisted_m2() {
    static AlgebraPtr alg = [] {
        RingVariant v = RingVariant::rational;
        auto a = AlgebraPresentation::create();
        a->display_name = "matrix pair with signature involution";
        a->variant = v;
        a->dim = 4;
        a->labels = {"E11", "E12", "E21", "E22"};
        Scalar zero = Scalar::zero(v), one = Scalar::one(v);
        a->structure.assign(16, {});
        auto set = [&](int x, int y, int z) {
            a->structure[static_cast<std::size_t>(x * 4 + y)] = {{z, one}};
        };
        // E_ij E_pq = [j == p] E_iq with indices E11=0 E12=1 E21=2 E22=3.
        set(0, 0, 0);
        set(0, 1, 1);
        set(1, 2, 0);
        set(1, 3, 1);
        set(2, 0, 2);
        set(2, 1, 3);
        set(3, 2, 2);
        set(3, 3, 3);
        a->involution = SMat(4, 4, zero);
        a->involution.at(0, 0) = one;
        a->involution.at(1, 2) = -one;
        a->involution.at(2, 1) = -one;
        a->involution.at(3, 3) = one;
        a->unit = SVec{one, zero, zero, one};
        a->class_desc = "twisted matrix";
        return a;
    }();
    return alg;
}

// Rank-two module over the scalars with pairing diag(1,-1), the twisted
// matrix algebra acting by matrix multiplication, left pairing the rank-one
// operators x (eta y)^t.
Bimodule signature_bimodule() {
    RingVariant v = RingVariant::rational;
    auto sc = scalar_algebra(v);
    auto b = twisted_m2();
    AMat gram = amat_zero(sc, 2, 2);
    gram.at(0, 0) = AlgebraElement::unit(sc);
    gram.at(1, 1) = AlgebraElement::zero(sc) - AlgebraElement::unit(sc);
    ModulePtr m = InnerProductModule::create(sc, gram, "signature pair");
    Representation rep{b, m, {}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            AMat im = amat_zero(sc, 2, 2);
            im.at(i, j) = AlgebraElement::unit(sc);
            rep.images.push_back(std::move(im));
        }
    AMat lg = amat_zero(b, 2, 2);
    lg.at(0, 0) = AlgebraElement::basis(b, 0);
    lg.at(0, 1) = AlgebraElement::zero(b) - AlgebraElement::basis(b, 1);
    lg.at(1, 0) = AlgebraElement::basis(b, 2);
    lg.at(1, 1) = AlgebraElement::zero(b) - AlgebraElement::basis(b, 3);
    return Bimodule{b, sc, m, std::move(rep), std::move(lg)};
}

// Free rank-two module over the 2x2 matrix algebra with Gram of matrix
// units: presents the row module, projective but with a large presentation
// radical.
ModulePtr row_module(const AlgebraPtr& m2, const std::string& name = "rows") {
    AMat g = amat_zero(m2, 2, 2);
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) g.at(p, q) = AlgebraElement::basis(m2, p * 2 + q);
    return InnerProductModule::create(m2, g, name);
}

bool same_class(const K0Class& x, const K0Class& y) {
    if (x.summands.size() != y.summands.size()) return false;
    for (std::size_t i = 0; i < x.summands.size(); ++i) {
        if (x.summands[i].second != y.summands[i].second) return false;
        if (x.summands[i].first->rank != y.summands[i].first->rank) return false;
        if (!find_isometric_isomorphism(x.summands[i].first, y.summands[i].first, {}).witness)
            return false;
    }
    return true;
}

const std::vector<std::string>& line_names() {
    static const std::vector<std::string> names = {
        "presentation shapes",
        "unital algebras",
        "module spans",
        "inner products nondegenerate",
        "right inner product full",
        "left inner product full",
        "compatibility",
        "left action faithful",
        "right gram hermitian",
        "left gram hermitian",
        "left action star representation",
        "right action adjointable for left product",
        "right inner product completely positive",
        "left inner product completely positive",
    };
    return names;
}

}  // namespace

TEST_CASE("column bimodule certifies strong") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);
    REQUIRE(e.level == MoritaLevel::strong);
    REQUIRE(e.report.passed);
    REQUIRE(e.bimodule.left_algebra->dim == 4);
    REQUIRE(e.bimodule.left_algebra->class_desc == "matrix");
    REQUIRE(e.report.lines.size() == line_names().size());
    for (const auto& name : line_names()) {
        const CheckLine* l = e.report.find(name);
        INFO(name);
        REQUIRE(l != nullptr);
        REQUIRE(l->passed);
    }
    // The same data certifies at the weaker levels too.
    REQUIRE(check_equivalence_bimodule(e.bimodule, MoritaLevel::star).passed);
    REQUIRE(check_equivalence_bimodule(e.bimodule, MoritaLevel::ring).passed);
}

TEST_CASE("identity arrow certifies strong") {
    auto sc = scalar_algebra(RingVariant::rational);
    auto m2 = matrix_algebra(sc, 2);
    PicardArrow id2 = identity_arrow(m2);
    REQUIRE(id2.report.passed);
    REQUIRE(id2.bimodule.module->rank == 1);
    PicardArrow idf = identity_arrow(function_algebra(2));
    REQUIRE(idf.report.passed);
}

TEST_CASE("indefinite pairing certifies star but not strong") {
    Bimodule bm = signature_bimodule();
    PicardArrow star_arrow = make_arrow(bm, MoritaLevel::star, true);
    REQUIRE(star_arrow.report.passed);

    EquivalenceReport strong = check_equivalence_bimodule(bm, MoritaLevel::strong);
    REQUIRE_FALSE(strong.passed);
    for (const auto& l : strong.lines) {
        INFO(l.name << ": " << l.detail);
        bool is_cp_line = l.name == "right inner product completely positive" ||
                          l.name == "left inner product completely positive";
        REQUIRE(l.passed == !is_cp_line);
    }
    // The twisted algebra carries no defining block, so the left positivity
    // question is reported as unresolved rather than silently passed.
    REQUIRE_FALSE(strong.find("left inner product completely positive")->detail.empty());

    std::string why;
    REQUIRE(conjugate_action(bm, &why).has_value());
}

TEST_CASE("twisted adjoint compatibility admits no positive definite pairing") {
    RingVariant v = RingVariant::rational;
    auto b = twisted_m2();
    Scalar zero = Scalar::zero(v), one = Scalar::one(v), iu = Scalar::i_unit(v);
    auto as_matrix = [&](const AlgebraElement& x) {
        SMat m(2, 2, zero);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) m.at(i, j) = x.coord(i * 2 + j);
        return m;
    };
    auto adjoint_of = [&](const SMat& m) {
        SMat r(2, 2, zero);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.at(i, j) = m.at(j, i).conj();
        return r;
    };
    int compatible = 0;
    for (int a = -2; a <= 2; ++a)
        for (int d = -2; d <= 2; ++d)
            for (int br = -2; br <= 2; ++br)
                for (int bi = -2; bi <= 2; ++bi) {
                    SMat g(2, 2, zero);
                    g.at(0, 0) = Scalar(Rat(a), v);
                    g.at(1, 1) = Scalar(Rat(d), v);
                    g.at(0, 1) = Scalar(Rat(br), v) + Scalar(Rat(bi), v) * iu;
                    g.at(1, 0) = g.at(0, 1).conj();
                    bool compat = true;
                    for (int c = 0; c < 4 && compat; ++c) {
                        AlgebraElement x = AlgebraElement::basis(b, c);
                        compat = g * as_matrix(x) == adjoint_of(as_matrix(x.involute())) * g;
                    }
                    if (!compat) continue;
                    ++compatible;
                    FMat fg(2, 2, CFrac::zero(v));
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j) fg.at(i, j) = CFrac(g.at(i, j));
                    REQUIRE(psd_check(fg).verdict != FormVerdict::positive_definite);
                }
    // Compatibility pins the pairing to multiples of diag(1,-1): five grid
    // points, all indefinite or degenerate.
    REQUIRE(compatible == 5);
}

TEST_CASE("unit arrows act as identities") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);
    PicardArrow left_unit = compose(identity_arrow(e.bimodule.left_algebra), e);
    REQUIRE(left_unit.report.passed);
    REQUIRE(arrows_isomorphic(left_unit, e).verdict == EquivVerdict::yes);
    PicardArrow right_unit = compose(e, identity_arrow(sc));
    REQUIRE(right_unit.report.passed);
    REQUIRE(arrows_isomorphic(right_unit, e).verdict == EquivVerdict::yes);
}

TEST_CASE("inverse arrows compose to unit arrows") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);
    PicardArrow inv = inverse(e);
    REQUIRE(inv.report.passed);
    REQUIRE(same_presentation(inv.bimodule.left_algebra, sc));
    REQUIRE(same_presentation(inv.bimodule.right_algebra, e.bimodule.left_algebra));

    PicardArrow small = compose(inv, e);
    REQUIRE(arrows_isomorphic(small, identity_arrow(sc)).verdict == EquivVerdict::yes);

    PicardArrow big = compose(e, inv);
    REQUIRE(arrows_isomorphic(big, identity_arrow(e.bimodule.left_algebra)).verdict ==
            EquivVerdict::yes);

    PicardArrow back = inverse(inv);
    REQUIRE(arrows_isomorphic(back, e).verdict == EquivVerdict::yes);
}

TEST_CASE("composition iterates to nested matrix algebras") {
    auto sc = scalar_algebra(RingVariant::rational);
    auto m2 = matrix_algebra(sc, 2);
    PicardArrow outer = column_bimodule(m2, 2);
    PicardArrow inner = column_bimodule(sc, 2);
    PicardArrow comp = compose(outer, inner);
    REQUIRE(comp.level == MoritaLevel::strong);
    REQUIRE(comp.report.passed);
    REQUIRE(comp.bimodule.left_algebra->dim == 16);
    REQUIRE(comp.bimodule.left_algebra->class_desc == "matrix");
    REQUIRE(same_presentation(comp.bimodule.right_algebra, sc));
    REQUIRE(comp.bimodule.module->rank == 4);
    REQUIRE(comp.bimodule.module->gram == amat_identity(sc, 4));
}

TEST_CASE("forget weakens and recertifies") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);
    PicardArrow st = forget(e, MoritaLevel::star);
    REQUIRE(st.level == MoritaLevel::star);
    REQUIRE(st.report.passed);
    PicardArrow rg = forget(st, MoritaLevel::ring);
    REQUIRE(rg.level == MoritaLevel::ring);
    REQUIRE(rg.report.passed);
    REQUIRE_THROWS_AS(forget(st, MoritaLevel::strong), std::invalid_argument);

    // Forgetting commutes with composition up to isomorphism.
    PicardArrow f = identity_arrow(e.bimodule.left_algebra);
    PicardArrow c1 = forget(compose(f, e), MoritaLevel::ring);
    PicardArrow c2 = compose(forget(f, MoritaLevel::ring), forget(e, MoritaLevel::ring));
    REQUIRE(c2.level == MoritaLevel::ring);
    REQUIRE(arrows_isomorphic(c1, c2).verdict == EquivVerdict::yes);

    REQUIRE(morita_level_from_name("star") == MoritaLevel::star);
    REQUIRE(std::string(morita_level_name(MoritaLevel::ring)) == "ring");
}

TEST_CASE("picard group enumerations") {
    auto sc = scalar_algebra(RingVariant::rational);
    REQUIRE(picard_group(sc).size() == 1);

    auto f2 = function_algebra(2);
    auto pic2 = picard_group(f2);
    REQUIRE(pic2.size() == 2);
    // The swap is witnessed distinct: the intertwiner space between the two
    // left actions is zero while the carriers are nonzero.
    REQUIRE(arrows_isomorphic(pic2[0], pic2[1]).verdict == EquivVerdict::no);
    for (const auto& arr : pic2) REQUIRE(arr.report.passed);

    auto m2 = matrix_algebra(sc, 2);
    REQUIRE(picard_group(m2).size() == 1);

    REQUIRE(picard_group(function_algebra(3)).size() == 6);

    REQUIRE_THROWS_AS(picard_group(twisted_m2()), std::invalid_argument);
}

TEST_CASE("isotropy transports self arrows") {
    auto f2 = function_algebra(2);
    PicardArrow g = column_bimodule(f2, 2);
    const AlgebraPtr& b = g.bimodule.left_algebra;
    auto pic = picard_group(f2);
    REQUIRE(pic.size() == 2);

    PicardArrow trivial = isotropy_action(g, pic[0]);
    REQUIRE(arrows_isomorphic(trivial, identity_arrow(b)).verdict == EquivVerdict::yes);

    PicardArrow moved = isotropy_action(g, pic[1]);
    REQUIRE(moved.report.passed);
    REQUIRE(arrows_isomorphic(moved, identity_arrow(b)).verdict == EquivVerdict::no);

    PicardArrow round = isotropy_action(inverse(g), moved);
    REQUIRE(arrows_isomorphic(round, pic[1]).verdict == EquivVerdict::yes);
}

TEST_CASE("projective classes normalize and add") {
    auto sc = scalar_algebra(RingVariant::rational);
    auto m2 = matrix_algebra(sc, 2);
    ModulePtr rows = row_module(m2);
    ModulePtr rows_again = row_module(m2, "rows again");
    ModulePtr canon = canonical_module(m2);

    K0Class merged = k0_class(m2, {{rows, 1}, {rows_again, 2}});
    REQUIRE(merged.summands.size() == 1);
    REQUIRE(merged.summands[0].second == 3);

    K0Class zero = k0_class(m2, {{rows, 1}, {rows_again, -1}});
    REQUIRE(zero.summands.empty());

    K0Class c1 = k0_class(m2, {{rows, 1}});
    K0Class c2 = k0_class(m2, {{canon, 1}});
    PicardArrow e = column_bimodule(sc, 2);

    K0Class moved = k0h_action(c1, e);
    REQUIRE(moved.summands.size() == 1);
    REQUIRE(moved.summands[0].first->rank == 1);
    REQUIRE(moved.summands[0].second == 1);

    K0Class lhs = k0_add(k0h_action(c1, e), k0h_action(c2, e));
    K0Class rhs = k0h_action(k0_add(c1, c2), e);
    REQUIRE(same_class(lhs, rhs));

    REQUIRE_THROWS_AS(k0h_action(moved, e), std::invalid_argument);
    REQUIRE_THROWS_AS(k0h_action(c1, forget(e, MoritaLevel::star)), std::invalid_argument);

    // A pairing scaled by the series variable has no witness in the ring.
    auto scl = scalar_algebra(RingVariant::lambda_poly);
    AMat lam = amat_zero(scl, 1, 1);
    lam.at(0, 0) = Scalar::lambda(1) * AlgebraElement::unit(scl);
    ModulePtr lam_mod = InnerProductModule::create(scl, lam, "lambda pairing");
    REQUIRE_THROWS_AS(k0_class(scl, {{lam_mod, 1}}), std::invalid_argument);
}

TEST_CASE("representation transfer along arrows") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);

    Representation rho{sc, canonical_module(sc), {amat_identity(sc, 1)}};
    TransferResult tr = rep_transfer(e, rho);
    REQUIRE(check_representation(tr.induced).ok);
    auto [cols, defining] = testgen::column_rep(2);
    REQUIRE(are_unitarily_equivalent(tr.induced, defining).verdict == EquivVerdict::yes);

    TransferResult back = rep_transfer(inverse(e), tr.induced);
    REQUIRE(are_unitarily_equivalent(back.induced, rho).verdict == EquivVerdict::yes);

    // Intertwiners ride along as id (x) T on the transferred carriers.
    ModulePtr h2 = free_module(sc, 2, "pair");
    Representation rho2{sc, h2, {amat_identity(sc, 2)}};
    AMat tmat = amat_identity(sc, 2);
    tmat.at(0, 1) = AlgebraElement::unit(sc);
    ModuleOperator t{h2, h2, tmat, std::nullopt};
    TransferResult s1 = rep_transfer(e, rho2);
    ModuleOperator moved = transfer_intertwiner(s1, s1, t);
    REQUIRE_FALSE(moved.matrix.is_zero());
    REQUIRE(check_intertwiner(moved, s1.induced, s1.induced).ok);

    Representation dead{sc, h2, {amat_zero(sc, 2, 2)}};
    REQUIRE_THROWS_AS(rep_transfer(e, dead), std::invalid_argument);
    REQUIRE_THROWS_AS(transfer_intertwiner(s1, tr, t), std::invalid_argument);
}

TEST_CASE("compose rejects mismatched middles") {
    auto sc = scalar_algebra(RingVariant::rational);
    PicardArrow e = column_bimodule(sc, 2);
    REQUIRE_THROWS_AS(compose(e, e), std::invalid_argument);
}
