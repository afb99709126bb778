#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <starmod/report.hpp>
#include <starmod/specfile.hpp>
#include <starmod/wedge.hpp>

using namespace starmod;

namespace {

struct Args {
    std::string command;
    std::vector<std::string> workspaces;
    std::map<std::string, std::string> opts;
    bool json = false;
    int budget = 64;
};

[[noreturn]] void usage_fail(const std::string& msg) {
    std::cerr << "starmod: " << msg << "\n"
              << "usage: starmod <command> [--workspace <file>]... [--budget <n>] [--json] "
                 "[command flags]\n"
                 "commands: check-positivity gns tensor verify-equivalence compose picard\n"
                 "          k0-action rep-transfer star-product deform-functional "
                 "classical-limit\n";
    std::exit(64);
}

Args parse_args(int argc, char** argv) {
    Args a;
    if (argc < 2) usage_fail("missing command");
    a.command = argv[1];
    if (const char* env = std::getenv("STARMOD_BUDGET")) {
        try {
            a.budget = std::stoi(env);
        } catch (const std::exception&) {
            usage_fail("STARMOD_BUDGET is not an integer");
        }
    }
    for (int k = 2; k < argc; ++k) {
        std::string flag = argv[k];
        if (flag.rfind("--", 0) != 0) usage_fail("unexpected argument '" + flag + "'");
        std::string key = flag.substr(2);
        if (key == "json") {
            a.json = true;
            continue;
        }
        if (k + 1 >= argc) usage_fail("flag '" + flag + "' needs a value");
        std::string value = argv[++k];
        if (key == "workspace") {
            a.workspaces.push_back(value);
        } else if (key == "budget") {
            try {
                a.budget = std::stoi(value);
            } catch (const std::exception&) {
                usage_fail("--budget is not an integer");
            }
        } else if (!a.opts.emplace(key, value).second) {
            usage_fail("flag '" + flag + "' given twice");
        }
    }
    if (a.budget <= 0) usage_fail("budget must be positive");
    return a;
}

const std::string& opt(const Args& a, const std::string& key) {
    auto it = a.opts.find(key);
    if (it == a.opts.end()) usage_fail(a.command + " needs --" + key);
    return it->second;
}

std::string opt_or(const Args& a, const std::string& key, std::string fallback) {
    auto it = a.opts.find(key);
    return it == a.opts.end() ? fallback : it->second;
}

int int_opt(const Args& a, const std::string& key) {
    try {
        return std::stoi(opt(a, key));
    } catch (const std::exception&) {
        usage_fail("--" + key + " is not an integer");
    }
}

int int_opt_or(const Args& a, const std::string& key, int fallback) {
    auto it = a.opts.find(key);
    if (it == a.opts.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        usage_fail("--" + key + " is not an integer");
    }
}

void reject_unknown(const Args& a, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : a.opts) {
        bool ok = false;
        for (const char* c : allowed)
            if (k == c) ok = true;
        if (!ok) usage_fail("unknown flag --" + k + " for " + a.command);
    }
}

MoritaLevel parse_level(const std::string& s) {
    if (s == "strong") return MoritaLevel::strong;
    if (s == "star") return MoritaLevel::star;
    if (s == "ring") return MoritaLevel::ring;
    usage_fail("level must be strong, star or ring");
}

std::string level_name(MoritaLevel l) {
    switch (l) {
        case MoritaLevel::strong: return "strong";
        case MoritaLevel::star: return "star";
        default: return "ring";
    }
}

std::string amat_line(const AMat& m) {
    std::string s = "[";
    for (int i = 0; i < m.rows(); ++i) {
        if (i) s += ", ";
        s += "[";
        for (int j = 0; j < m.cols(); ++j) {
            if (j) s += ", ";
            s += print_element(m.at(i, j));
        }
        s += "]";
    }
    return s + "]";
}

std::string functional_line(const Functional& w) {
    std::string s = "values [";
    const SVec& v = w.values();
    for (std::size_t a = 0; a < v.size(); ++a) {
        if (a) s += ", ";
        s += print_scalar(v[a]);
    }
    return s + "]";
}

// Registry name of an algebra, or a freshly emitted block under `fallback`.
std::string algebra_ref_or_emit(Report& rep, const Workspace& ws, const AlgebraPtr& alg,
                                const std::string& fallback) {
    for (const auto& [name, a] : ws.algebras)
        if (a == alg) return name;
    std::ostringstream os;
    emit_algebra(os, fallback, alg);
    rep.blocks.push_back(os.str());
    return fallback;
}

void equivalence_entries(Report& rep, const EquivalenceReport& er) {
    for (const auto& line : er.lines) {
        if (morita_rank(line.scope) > morita_rank(er.level)) continue;
        rep.check(line.name, line.passed, line.detail);
    }
}

// Certify a workspace bimodule as an arrow; on failure the report carries the
// failing lines and the caller returns exit 1.
std::optional<PicardArrow> arrow_or_report(Report& rep, const Bimodule& bm, MoritaLevel level) {
    PicardArrow a = make_arrow(bm, level, false);
    if (!a.report.passed) {
        equivalence_entries(rep, a.report);
        return std::nullopt;
    }
    return a;
}

int finish(const Report& rep, const Args& a) {
    std::cout << (a.json ? rep.render_json() : rep.render_text());
    return rep.exit_code();
}

Workspace load_workspaces(const Args& a) {
    Workspace ws;
    for (const auto& f : a.workspaces) load_spec_file(ws, f);
    return ws;
}

// ---------------------------------------------------------------------------

int cmd_check_positivity(const Args& a) {
    reject_unknown(a, {"algebra", "element"});
    Workspace ws = load_workspaces(a);
    const AlgebraPtr& alg = ws.algebra(opt(a, "algebra"));
    AlgebraElement x = AlgebraElement::zero(alg);
    try {
        x = parse_element(alg, opt(a, "element"));
    } catch (const std::exception& e) {
        usage_fail(e.what());
    }
    Report rep;
    rep.command = "check-positivity";
    rep.info("algebra", opt(a, "algebra"));
    rep.info("element", print_element(x));

    MembershipResult res;
    if (alg->has_exact_class()) {
        rep.info("mode", "exact");
        res = membership_aplus_exact(x);
    } else {
        rep.info("mode", "search");
        res = membership_app(x, a.budget);
    }
    if (res.verdict == Membership::member) {
        std::string note = res.cert.note;
        if (res.cert.kind == CertKind::sos_decomposition)
            note = "sum of " + std::to_string(res.cert.sos.size()) + " squares";
        rep.check("element positive", true, note);
    } else if (res.verdict == Membership::not_member) {
        std::string why = res.cert.note;
        if (res.cert.separating)
            why = "separating functional with " + functional_line(*res.cert.separating);
        rep.check("element positive", false, why);
    } else {
        rep.unknown("element positive", "budget exhausted after " + std::to_string(a.budget) +
                                            " candidates");
    }
    return finish(rep, a);
}

int cmd_gns(const Args& a) {
    reject_unknown(a, {"algebra", "functional"});
    Workspace ws = load_workspaces(a);
    const AlgebraPtr& alg = ws.algebra(opt(a, "algebra"));
    const Functional& omega = ws.functional(opt(a, "functional"));
    if (!same_presentation(omega.algebra(), alg))
        specdet::ref_fail("<args>", 0,
                          "functional '" + opt(a, "functional") + "' is not over algebra '" +
                              opt(a, "algebra") + "'");

    Report rep;
    rep.command = "gns";
    rep.info("algebra", opt(a, "algebra"));
    rep.info("functional", opt(a, "functional"));

    PositiveFunctionalCheck pos = is_positive_functional(omega);
    if (!pos.positive) {
        std::string why = pos.reason;
        if (pos.witness) why += " at " + print_element(*pos.witness);
        rep.check("functional positive", false, why);
        return finish(rep, a);
    }
    rep.check("functional positive", true);

    GnsResult g = gns_construct(omega);
    rep.info("dimension", std::to_string(g.representation.module->rank));
    for (std::size_t k = 0; k < g.ideal_basis.size(); ++k)
        rep.info("ideal[" + std::to_string(k) + "]", print_element(g.ideal_basis[k]));
    for (int b = 0; b < alg->dim; ++b)
        rep.info("pi[" + alg->labels[static_cast<std::size_t>(b)] + "]",
                 amat_line(g.representation.images[static_cast<std::size_t>(b)]));

    CheckReport rr = check_representation(g.representation);
    rep.check("representation axioms", rr.ok, rr.ok ? "" : rr.failures.front());

    bool recon = true;
    std::string witness;
    for (int b = 0; b < alg->dim && recon; ++b) {
        ModuleOperator pia{g.representation.module, g.representation.module,
                           g.representation.images[static_cast<std::size_t>(b)], std::nullopt};
        AlgebraElement val = inner_product(g.cyclic_vector, op_apply(pia, g.cyclic_vector));
        if (!(val.coord(0) == omega(AlgebraElement::basis(alg, b)))) {
            recon = false;
            witness = "basis " + alg->labels[static_cast<std::size_t>(b)];
        }
    }
    rep.check("state reconstruction", recon, witness);
    return finish(rep, a);
}

int cmd_tensor(const Args& a) {
    reject_unknown(a, {"left", "right"});
    Workspace ws = load_workspaces(a);
    const std::string& lref = opt(a, "left");
    const std::string& rref = opt(a, "right");
    const ModulePtr& f = ws.module(lref);
    const ModulePtr& e = ws.module(rref);
    auto mid = ws.actions.find(rref);
    if (mid == ws.actions.end() || !same_presentation(mid->second.algebra, f->algebra))
        specdet::ref_fail("<args>", 0,
                          "module '" + rref + "' carries no action of the left factor's algebra");
    std::optional<Representation> outer;
    auto oit = ws.actions.find(lref);
    if (oit != ws.actions.end()) outer = oit->second;

    Report rep;
    rep.command = "tensor";
    rep.info("left", lref);
    rep.info("right", rref);
    TensorModule t = internal_tensor(f, mid->second, outer);
    rep.info("formal_rank", std::to_string(t.formal->rank));
    rep.info("rank", std::to_string(t.result->rank));
    rep.info("quotient_map", amat_line(t.quotient_map));
    rep.check("degeneracy quotient", true,
              "kept " + std::to_string(t.result->rank) + " of " +
                  std::to_string(t.formal->rank) + " generators");
    std::string over = algebra_ref_or_emit(rep, ws, e->algebra, lref + "_x_" + rref + "_alg");
    std::ostringstream os;
    if (t.induced) {
        CheckReport ir = check_representation(*t.induced);
        rep.check("induced action axioms", ir.ok, ir.ok ? "" : ir.failures.front());
        std::string of =
            algebra_ref_or_emit(rep, ws, t.induced->algebra, lref + "_x_" + rref + "_left");
        emit_module(os, lref + "_x_" + rref, t.result, over, &*t.induced, of);
    } else {
        emit_module(os, lref + "_x_" + rref, t.result, over);
    }
    rep.blocks.push_back(os.str());
    return finish(rep, a);
}

int cmd_verify_equivalence(const Args& a) {
    reject_unknown(a, {"bimodule", "level"});
    Workspace ws = load_workspaces(a);
    const Bimodule& bm = ws.bimodule(opt(a, "bimodule"));
    MoritaLevel level = parse_level(opt_or(a, "level", "strong"));
    Report rep;
    rep.command = "verify-equivalence";
    rep.info("bimodule", opt(a, "bimodule"));
    rep.info("level", level_name(level));
    EquivalenceReport er = check_equivalence_bimodule(bm, level);
    equivalence_entries(rep, er);
    return finish(rep, a);
}

int cmd_compose(const Args& a) {
    reject_unknown(a, {"left", "right"});
    Workspace ws = load_workspaces(a);
    const std::string& lref = opt(a, "left");
    const std::string& rref = opt(a, "right");
    Report rep;
    rep.command = "compose";
    rep.info("left", lref);
    rep.info("right", rref);

    std::optional<PicardArrow> fa = arrow_or_report(rep, ws.bimodule(lref), MoritaLevel::strong);
    if (!fa) return finish(rep, a);
    std::optional<PicardArrow> ea = arrow_or_report(rep, ws.bimodule(rref), MoritaLevel::strong);
    if (!ea) return finish(rep, a);

    PicardArrow comp = compose(*fa, *ea);
    rep.info("rank", std::to_string(comp.bimodule.module->rank));
    rep.info("level", level_name(comp.level));
    equivalence_entries(rep, comp.report);

    std::string carrier = lref + "_o_" + rref + "_carrier";
    std::string over =
        algebra_ref_or_emit(rep, ws, comp.bimodule.module->algebra, lref + "_o_" + rref + "_right");
    std::string left =
        algebra_ref_or_emit(rep, ws, comp.bimodule.left_algebra, lref + "_o_" + rref + "_left");
    std::ostringstream ms;
    emit_module(ms, carrier, comp.bimodule.module, over);
    rep.blocks.push_back(ms.str());
    std::ostringstream bs;
    emit_bimodule(bs, lref + "_o_" + rref, comp.bimodule, left, carrier);
    rep.blocks.push_back(bs.str());
    return finish(rep, a);
}

int cmd_picard(const Args& a) {
    reject_unknown(a, {"algebra"});
    Workspace ws = load_workspaces(a);
    const AlgebraPtr& alg = ws.algebra(opt(a, "algebra"));
    Report rep;
    rep.command = "picard";
    rep.info("algebra", opt(a, "algebra"));
    std::vector<PicardArrow> arrows = picard_group(alg, std::nullopt, a.budget);
    rep.info("arrows", std::to_string(arrows.size()));
    bool all = true;
    for (std::size_t k = 0; k < arrows.size(); ++k) {
        rep.info("arrow[" + std::to_string(k) + "]",
                 arrows[k].bimodule.module->display_name + " (rank " +
                     std::to_string(arrows[k].bimodule.module->rank) + ")");
        all = all && arrows[k].report.passed;
    }
    rep.check("arrows certified strong", all);
    return finish(rep, a);
}

int cmd_k0_action(const Args& a) {
    reject_unknown(a, {"module", "bimodule"});
    Workspace ws = load_workspaces(a);
    const ModulePtr& m = ws.module(opt(a, "module"));
    Report rep;
    rep.command = "k0-action";
    rep.info("module", opt(a, "module"));
    rep.info("bimodule", opt(a, "bimodule"));

    std::optional<PicardArrow> arrow =
        arrow_or_report(rep, ws.bimodule(opt(a, "bimodule")), MoritaLevel::strong);
    if (!arrow) return finish(rep, a);

    K0Class cls;
    try {
        cls = k0_class(m->algebra, {{m, 1}});
    } catch (const std::invalid_argument& e) {
        rep.check("class valid", false, e.what());
        return finish(rep, a);
    }
    rep.check("class valid", true);
    K0Class out = k0h_action(cls, *arrow);
    rep.info("summands", std::to_string(out.summands.size()));
    for (std::size_t k = 0; k < out.summands.size(); ++k)
        rep.info("summand[" + std::to_string(k) + "]",
                 "rank " + std::to_string(out.summands[k].first->rank) + " multiplicity " +
                     std::to_string(out.summands[k].second));
    return finish(rep, a);
}

int cmd_rep_transfer(const Args& a) {
    reject_unknown(a, {"module", "bimodule"});
    Workspace ws = load_workspaces(a);
    const std::string& mref = opt(a, "module");
    ws.module(mref);  // reference check
    auto rit = ws.actions.find(mref);
    if (rit == ws.actions.end())
        specdet::ref_fail("<args>", 0, "module '" + mref + "' carries no representation");

    Report rep;
    rep.command = "rep-transfer";
    rep.info("module", mref);
    rep.info("bimodule", opt(a, "bimodule"));
    std::optional<PicardArrow> arrow =
        arrow_or_report(rep, ws.bimodule(opt(a, "bimodule")), MoritaLevel::strong);
    if (!arrow) return finish(rep, a);

    TransferResult res = rep_transfer(*arrow, rit->second);
    rep.info("dimension", std::to_string(res.induced.module->rank));
    CheckReport ir = check_representation(res.induced);
    rep.check("induced representation axioms", ir.ok, ir.ok ? "" : ir.failures.front());

    std::string over =
        algebra_ref_or_emit(rep, ws, res.induced.module->algebra, mref + "_transfer_scalars");
    std::string of =
        algebra_ref_or_emit(rep, ws, res.induced.algebra, mref + "_transfer_left");
    std::ostringstream os;
    emit_module(os, mref + "_transfer", res.induced.module, over, &res.induced, of);
    rep.blocks.push_back(os.str());
    return finish(rep, a);
}

int cmd_star_product(const Args& a) {
    reject_unknown(a, {"vars", "order", "check"});
    int vars = int_opt(a, "vars");
    int order = int_opt(a, "order");
    int degree = int_opt_or(a, "check", 3);
    if (vars <= 0 || order < 0 || degree < 0) usage_fail("vars > 0, order >= 0, check >= 0");

    Report rep;
    rep.command = "star-product";
    rep.info("vars", std::to_string(vars));
    rep.info("order", std::to_string(order));
    rep.info("degree", std::to_string(degree));
    StarProduct s = moyal_star(vars, order);
    CheckReport cr = check_star_axioms(s, degree, order);
    for (const char* cat :
         {"unit", "classical part", "poisson normalization", "hermitian", "associativity"}) {
        std::string prefix = std::string(cat) + ":";
        std::string why;
        for (const auto& f : cr.failures)
            if (f.rfind(prefix, 0) == 0) {
                why = f;
                break;
            }
        rep.check(cat, why.empty(), why);
    }
    std::ostringstream os;
    emit_star(os, "moyal_v" + std::to_string(vars) + "_o" + std::to_string(order), s);
    rep.blocks.push_back(os.str());
    return finish(rep, a);
}

int cmd_deform_functional(const Args& a) {
    reject_unknown(a, {"functional", "order", "check", "star"});
    Workspace ws = load_workspaces(a);
    const FormalFunctional& omega0 = ws.moment_functional(opt(a, "functional"));
    int order = int_opt(a, "order");
    int degree = int_opt_or(a, "check", 2);
    if (order < 1 || degree < 1) usage_fail("order and check degree must be positive");

    StarProduct s;
    if (a.opts.count("star")) {
        s = ws.star(opt(a, "star"));
        if (s.order < order) usage_fail("star product order is below the requested lift order");
    } else {
        s = moyal_star(omega0.vars, order);
    }
    if (s.vars != omega0.vars) usage_fail("variable counts of functional and product differ");

    Report rep;
    rep.command = "deform-functional";
    rep.info("functional", opt(a, "functional"));
    rep.info("order", std::to_string(order));
    rep.info("degree", std::to_string(degree));

    LiftResult res;
    try {
        res = deform_functional(omega0, s, order, degree);
    } catch (const std::invalid_argument& e) {
        std::string what = e.what();
        if (what.find("not classically positive") != std::string::npos) {
            rep.check("classically positive", false, what);
            return finish(rep, a);
        }
        usage_fail(what);
    }
    rep.check("classically positive", true);
    for (std::size_t r = 0; r < res.corrections.size(); ++r) {
        bool zero = true;
        for (const auto& [mono, val] : res.corrections[r].values)
            if (!val.is_zero()) zero = false;
        rep.check("order " + std::to_string(r + 1) + " correction", true,
                  zero ? "zero" : "scaled moment correction");
    }
    if (res.budget_exhausted) {
        rep.unknown("order " + std::to_string(res.corrections.size() + 1) + " correction",
                    res.detail);
        return finish(rep, a);
    }
    FormalPositivity fp = formal_positive(res.lift, s, degree, order);
    rep.check("lift positive", fp.positive,
              fp.positive ? "" : fp.detail + " at " + print_poly(*fp.witness));
    std::ostringstream os;
    emit_moments(os, opt(a, "functional") + "_lift", res.lift);
    rep.blocks.push_back(os.str());
    return finish(rep, a);
}

int cmd_classical_limit(const Args& a) {
    reject_unknown(a, {"algebra", "bimodule", "star", "functional"});
    Workspace ws = load_workspaces(a);
    int given = static_cast<int>(a.opts.count("algebra")) + a.opts.count("bimodule") +
                a.opts.count("star") + a.opts.count("functional");
    if (given != 1)
        usage_fail("classical-limit takes exactly one of --algebra --bimodule --star --functional");

    Report rep;
    rep.command = "classical-limit";

    if (a.opts.count("algebra")) {
        const std::string& ref = opt(a, "algebra");
        rep.info("algebra", ref);
        AlgebraPtr cl = classical_limit(ws.algebra(ref));
        StarCheckReport sr = check_star_algebra(cl);
        rep.check("limit axioms", sr.ok, sr.ok ? "" : sr.failures.front());
        std::ostringstream os;
        emit_algebra(os, ref + "_cl", cl);
        rep.blocks.push_back(os.str());
    } else if (a.opts.count("star")) {
        const std::string& ref = opt(a, "star");
        rep.info("star", ref);
        StarProduct cl = classical_limit(ws.star(ref));
        rep.check("order zero", cl.order == 0);
        std::ostringstream os;
        emit_star(os, ref + "_cl", cl);
        rep.blocks.push_back(os.str());
    } else if (a.opts.count("functional")) {
        const std::string& ref = opt(a, "functional");
        rep.info("functional", ref);
        FormalFunctional cl = classical_limit(ws.moment_functional(ref));
        rep.check("limit defined", true);
        std::ostringstream os;
        emit_moments(os, ref + "_cl", cl);
        rep.blocks.push_back(os.str());
    } else {
        const std::string& ref = opt(a, "bimodule");
        rep.info("bimodule", ref);
        std::optional<PicardArrow> arrow =
            arrow_or_report(rep, ws.bimodule(ref), MoritaLevel::strong);
        if (!arrow) return finish(rep, a);
        PicardArrow cl = classical_limit(*arrow);
        equivalence_entries(rep, cl.report);
        std::string left = algebra_ref_or_emit(rep, ws, cl.bimodule.left_algebra, ref + "_cl_left");
        std::string right =
            algebra_ref_or_emit(rep, ws, cl.bimodule.module->algebra, ref + "_cl_right");
        std::ostringstream ms;
        emit_module(ms, ref + "_cl_carrier", cl.bimodule.module, right);
        rep.blocks.push_back(ms.str());
        std::ostringstream bs;
        emit_bimodule(bs, ref + "_cl", cl.bimodule, left, ref + "_cl_carrier");
        rep.blocks.push_back(bs.str());
    }
    return finish(rep, a);
}

}  // namespace

int main(int argc, char** argv) {
    Args a = parse_args(argc, argv);
    try {
        if (a.command == "check-positivity") return cmd_check_positivity(a);
        if (a.command == "gns") return cmd_gns(a);
        if (a.command == "tensor") return cmd_tensor(a);
        if (a.command == "verify-equivalence") return cmd_verify_equivalence(a);
        if (a.command == "compose") return cmd_compose(a);
        if (a.command == "picard") return cmd_picard(a);
        if (a.command == "k0-action") return cmd_k0_action(a);
        if (a.command == "rep-transfer") return cmd_rep_transfer(a);
        if (a.command == "star-product") return cmd_star_product(a);
        if (a.command == "deform-functional") return cmd_deform_functional(a);
        if (a.command == "classical-limit") return cmd_classical_limit(a);
        usage_fail("unknown command '" + a.command + "'");
    } catch (const SpecFileError& e) {
        std::cerr << "starmod: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::invalid_argument& e) {
        std::cerr << "starmod: " << e.what() << "\n";
        return 64;
    } catch (const std::domain_error& e) {
        std::cerr << "starmod: " << e.what() << "\n";
        return 64;
    } catch (const std::logic_error& e) {
        std::cerr << "starmod: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "starmod: " << e.what() << "\n";
        return 1;
    }
}
