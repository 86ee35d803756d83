// gfh: command-line front end for the generating family homology library.

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gfh/families.hpp"
#include "gfh/genfam.hpp"
#include "gfh/random.hpp"
#include "gfh/spectral.hpp"

using nlohmann::json;

namespace {

struct Options {
    std::string input = "-";
    std::string output = "-";
    std::string csv;
    std::string field_csv;
    std::string base = "S1";
    std::vector<std::size_t> betti;
    std::uint32_t resolution = 65;
    double box_scale = 1.0;
    std::optional<double> eps, omega;
    int m = 1, n = 2, r = 4, copies = 2, r_max = 2, random = 0;
    bool json = false, stability = false, no_box_check = false;
    std::uint64_t seed = 0;
};

json read_json(const std::string& path) {
    std::string text;
    if (path == "-") {
        text.assign(std::istreambuf_iterator<char>(std::cin), {});
    } else {
        std::ifstream in(path);
        if (!in) throw gfh::ValidationError("cannot open input file", path);
        text.assign(std::istreambuf_iterator<char>(in), {});
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw gfh::ValidationError(std::string("invalid JSON: ") + e.what(), path);
    }
}

void write_text(const Options& o, const std::string& text) {
    if (o.output == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(o.output);
    if (!out) throw gfh::ValidationError("cannot open output file", o.output);
    out << text;
}

void emit_json(const Options& o, const json& j) { write_text(o, j.dump(2) + "\n"); }

std::string table_text(const gfh::GHTable& t) {
    std::ostringstream os;
    os << "degree\trank\n";
    for (auto& [k, r] : t.ranks)
        if (r) os << k << "\t" << r << "\n";
    if (t.empty()) os << "(zero)\n";
    return os.str();
}

// A family input is either a FilteredComplex document or a dumbbell-style
// document {"complex", "monodromy"} over S^m.
gfh::FilteredComplex family_input(const json& j, int m) {
    if (j.contains("complex")) {
        auto c = gfh::complex_from_json(j["complex"], "$.complex");
        if (!j.contains("monodromy")) throw gfh::ValidationError("document needs \"monodromy\"", "$.monodromy");
        auto f = gfh::fiber_map_from_json(j["monodromy"], "$.monodromy");
        return gfh::sphere_family(c, m, f);
    }
    return gfh::family_from_json(j);
}

gfh::GHTable table_input(const json& j) {
    const json* t = &j;
    if (j.contains("gh")) t = &j["gh"];
    else if (j.contains("table")) t = &j["table"];
    if (!t->is_object()) throw gfh::ValidationError("expected a GH table object", "$");
    gfh::GHTable out;
    for (auto& [k, v] : t->items()) {
        if (!v.is_number_unsigned()) throw gfh::ValidationError("rank must be a non-negative integer", "$." + k);
        try {
            out.add(std::stoi(k), v.get<std::size_t>());
        } catch (const std::invalid_argument&) {
            throw gfh::ValidationError("degree key must be an integer", "$." + k);
        }
    }
    return out;
}

std::vector<std::size_t> base_betti(const Options& o) {
    if (!o.betti.empty()) return o.betti;
    if (o.base == "point") return {1};
    if (o.base == "S1") return {1, 1};
    if (o.base == "S2") return {1, 0, 1};
    if (o.base == "T2") return {1, 2, 1};
    throw gfh::ValidationError("unknown base (use point, S1, S2, T2 or --betti)", o.base);
}

gfh::GHOptions gh_options(const Options& o) {
    gfh::GHOptions g;
    g.resolution = o.resolution;
    g.box_scale = o.box_scale;
    g.eps = o.eps;
    g.omega = o.omega;
    g.validate_box = !o.no_box_check;
    return g;
}

int cmd_gh(const Options& o) {
    auto spec = gfh::spec_from_json(read_json(o.input));
    auto opt = gh_options(o);
    json out;
    std::string text;
    if (o.stability) {
        auto rep = gfh::stability(spec, opt);
        out = rep;
        text = table_text(rep.base.table) + (rep.ok ? "stable under all reruns\n" : "UNSTABLE\n");
        for (auto& d : rep.discrepancies) text += "  " + d + "\n";
    } else {
        auto res = gfh::gh(spec, opt);
        out = res;
        text = table_text(res.table);
        for (auto& f : res.flags) text += "flag: " + f + "\n";
        for (auto& w : res.warnings) text += "warning: " + w + "\n";
    }
    if (!o.field_csv.empty()) {
        auto d = gfh::difference(spec, o.box_scale);
        auto field = gfh::sample(d.delta, d.vars, d.box, o.resolution);
        std::ofstream f(o.field_csv);
        if (!f) throw gfh::ValidationError("cannot open field output", o.field_csv);
        gfh::write_field_csv(f, field);
    }
    if (o.json) emit_json(o, out);
    else write_text(o, text);
    return 0;
}

int cmd_front(const Options& o) {
    auto spec = gfh::spec_from_json(read_json(o.input));
    auto pts = gfh::legendrian_front(spec, o.resolution);
    std::ostringstream os;
    gfh::write_front_csv(os, spec, pts);
    if (o.csv.empty() || o.csv == "-") {
        std::cout << os.str();
    } else {
        std::ofstream f(o.csv);
        if (!f) throw gfh::ValidationError("cannot open CSV output", o.csv);
        f << os.str();
    }
    return 0;
}

int cmd_spin(const Options& o) {
    auto spec = gfh::spec_from_json(read_json(o.input));
    if (o.m < 1) throw gfh::ValidationError("--m must be at least 1");
    emit_json(o, gfh::spin_spec(spec, static_cast<std::size_t>(o.m)));
    return 0;
}

int cmd_ss(const Options& o) {
    auto fc = family_input(read_json(o.input), o.m);
    auto p = gfh::pages(fc, o.r_max);
    auto total = gfh::total_homology(fc);
    auto conv = gfh::convergence_check(p, total);
    const bool collapse = gfh::collapse_check(p);
    if (o.json) {
        json j = gfh::pages_to_json(p);
        j["total"] = total;
        j["convergence"] = conv.ok;
        if (!conv.ok) j["failing_degree"] = *conv.failing_degree;
        j["collapse_at_e2"] = collapse;
        emit_json(o, j);
        return 0;
    }
    std::ostringstream os;
    for (auto& [r, pg] : p.pages) {
        os << "E" << r << ":\n";
        for (auto& [bd, rk] : pg.ranks)
            if (rk) os << "  (" << bd.first << "," << bd.second << ")\t" << rk << "\n";
    }
    os << "E_inf:\n";
    for (auto& [bd, rk] : p.e_infinity.ranks)
        if (rk) os << "  (" << bd.first << "," << bd.second << ")\t" << rk << "\n";
    os << "stabilized at r = " << p.stabilized_at << "\n";
    os << "total homology:\n" << table_text(total);
    os << "convergence: " << (conv.ok ? "ok" : "FAILED") << "\n";
    os << "collapse at E2: " << (collapse ? "yes" : "no") << "\n";
    write_text(o, os.str());
    return 0;
}

int cmd_psi(const Options& o) {
    auto p = gfh::psi(family_input(read_json(o.input), o.m));
    if (o.json) {
        emit_json(o, p);
        return 0;
    }
    std::ostringstream os;
    os << "m = " << p.m << ", degree shift " << p.degree_shift << "\n";
    for (auto& [d, mat] : p.map.matrices) {
        os << "degree " << d << " -> " << d + p.degree_shift << ":\n";
        for (auto& row : mat.to_dense()) {
            os << " ";
            for (int e : row) os << " " << e;
            os << "\n";
        }
    }
    write_text(o, os.str());
    return 0;
}

int cmd_twistspin(const Options& o) {
    auto fc = family_input(read_json(o.input), o.m);
    auto sd = gfh::sphere_data(fc);
    auto t = gfh::twist_spin(sd.fiber, gfh::psi(fc), o.m);
    if (o.json) emit_json(o, t);
    else write_text(o, table_text(t));
    return 0;
}

int cmd_kunneth(const Options& o) {
    auto t = gfh::kunneth(table_input(read_json(o.input)), base_betti(o));
    if (o.json) emit_json(o, t);
    else write_text(o, table_text(t));
    return 0;
}

int cmd_dumbbell(const Options& o) {
    auto db = gfh::dumbbell(o.n, o.r, o.copies);
    json j;
    j["complex"] = db.complex;
    j["monodromy"] = db.monodromy;
    j["gh"] = gfh::homology(db.complex);
    j["notes"] = db.notes;
    emit_json(o, j);
    return 0;
}

int cmd_certify(const Options& o) {
    auto j = read_json(o.input);
    gfh::PsiMap p;
    std::vector<std::string> notes;
    if (j.contains("degree_shift") && j.contains("degrees") && j.contains("m")) {
        p = gfh::psi_from_json(j);
    } else {
        p = gfh::psi(family_input(j, o.m));
        if (j.contains("notes")) notes = j["notes"].get<std::vector<std::string>>();
    }
    auto c = gfh::certificate(p);
    c.notes.insert(c.notes.end(), notes.begin(), notes.end());
    emit_json(o, c);
    return 0;
}

json check_document(const json& j) {
    json out;
    if (j.contains("expr")) {
        auto s = gfh::spec_from_json(j);
        gfh::validate(s);
        out = {{"kind", "generating_family"}, {"ok", true}};
    } else if (j.contains("base")) {
        auto fc = gfh::family_from_json(j);
        auto d2 = gfh::verify_d_squared(fc);
        out = {{"kind", "family"}, {"d_squared", d2.ok}};
        if (!d2.ok) {
            out["witness"] = *d2.witness;
            out["ok"] = false;
            return out;
        }
        auto p = gfh::pages(fc, 2);
        auto conv = gfh::convergence_check(p, gfh::total_homology(fc));
        out["convergence"] = conv.ok;
        out["collapse_at_e2"] = gfh::collapse_check(p);
        out["ok"] = conv.ok;
    } else if (j.contains("complex")) {
        auto c = gfh::complex_from_json(j["complex"], "$.complex");
        auto d2 = gfh::verify_d_squared(c);
        out = {{"kind", "dumbbell"}, {"d_squared", d2.ok}, {"ok", d2.ok}};
        if (d2.ok && j.contains("monodromy")) gfh::sphere_family(c, 1, gfh::fiber_map_from_json(j["monodromy"], "$.monodromy"));
    } else if (j.contains("generators")) {
        auto c = gfh::complex_from_json(j);
        auto d2 = gfh::verify_d_squared(c);
        out = {{"kind", "complex"}, {"d_squared", d2.ok}, {"ok", d2.ok}};
        if (!d2.ok) out["witness"] = *d2.witness;
    } else {
        throw gfh::ValidationError("unrecognized document", "$");
    }
    return out;
}

// Randomized self-check of the family laws, driven by --seed.
json check_random(int count, std::uint64_t seed) {
    gfh::Rng rng(seed);
    json out = {{"kind", "random"}, {"seed", seed}, {"count", count}};
    int conv = 0, hom = 0, fact = 0;
    for (int i = 0; i < count; ++i) {
        auto rc = gfh::random_complex(rng);
        auto mu1 = gfh::random_chain_map(rng, rc, 0, true);
        auto mu2 = gfh::random_chain_map(rng, rc, 0, true);
        auto f1 = gfh::sphere_family(rc.complex, 1, gfh::contract(rc.complex, mu1, 0));
        auto f2 = gfh::sphere_family(rc.complex, 1, gfh::contract(rc.complex, mu2, 0));
        auto f12 = gfh::sphere_family(rc.complex, 1, gfh::contract(rc.complex, gfh::compose(mu1, mu2), 0));
        if (gfh::convergence_check(gfh::pages(f1, 2), gfh::total_homology(f1)).ok) ++conv;
        auto lhs = gfh::psi(f12);
        auto rhs = gfh::compose(gfh::psi(f1), gfh::psi(f2));
        if (lhs.map.matrices == rhs.map.matrices) ++hom;
        if (gfh::factor_check(f1, gfh::spin_family(f1)).ok) ++fact;
    }
    out["convergence"] = conv;
    out["homomorphism"] = hom;
    out["factoring"] = fact;
    out["ok"] = conv == count && hom == count && fact == count;
    return out;
}

int cmd_check(const Options& o) {
    json out = o.random > 0 ? check_random(o.random, o.seed) : check_document(read_json(o.input));
    emit_json(o, out);
    return out.value("ok", false) ? 0 : 1;
}

void diagnostic(const std::string& kind, const std::string& message, const std::string& where) {
    json j = {{"error", kind}, {"message", message}};
    if (!where.empty()) j["where"] = where;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Generating family homology of Legendrians and families of Legendrians"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto input = [&](CLI::App* s) { s->add_option("input", o.input, "input JSON (default: stdin)"); };
    auto out = [&](CLI::App* s) { s->add_option("-o,--output", o.output, "output file (default: stdout)"); };
    auto as_json = [&](CLI::App* s) { s->add_flag("--json", o.json, "machine-readable JSON output"); };
    auto numeric = [&](CLI::App* s) {
        s->add_option("--resolution", o.resolution, "grid points per axis")->check(CLI::Range(3u, 4097u));
        s->add_option("--box-scale", o.box_scale, "scale of the computation box")->check(CLI::PositiveNumber);
    };

    auto* gh = app.add_subcommand("gh", "GH table of a generating family");
    input(gh), out(gh), as_json(gh), numeric(gh);
    gh->add_option("--eps", o.eps, "lower window level");
    gh->add_option("--omega", o.omega, "upper window level");
    gh->add_flag("--stability", o.stability, "rerun at doubled resolution, doubled box and alternate window");
    gh->add_flag("--no-box-check", o.no_box_check, "skip box validation");
    gh->add_option("--field-csv", o.field_csv, "write the sampled difference function as CSV");

    auto* front = app.add_subcommand("front", "front point cloud of a generating family");
    input(front), numeric(front);
    front->add_option("--csv", o.csv, "CSV output file (default: stdout)");

    auto* spin = app.add_subcommand("spin", "front-spin a generating family");
    input(spin), out(spin);
    spin->add_option("--m", o.m, "spinning dimension");

    auto* ss = app.add_subcommand("ss", "spectral sequence pages of a family complex");
    input(ss), out(ss), as_json(ss);
    ss->add_option("--m", o.m, "sphere dimension for dumbbell-style input");
    ss->add_option("--r-max", o.r_max, "last page to report");

    auto* psi = app.add_subcommand("psi", "monodromy morphism Psi of a family over S^m");
    input(psi), out(psi), as_json(psi);
    psi->add_option("--m", o.m, "sphere dimension for dumbbell-style input");

    auto* twist = app.add_subcommand("twistspin", "GH of the twist spin along a family over S^m");
    input(twist), out(twist), as_json(twist);
    twist->add_option("--m", o.m, "sphere dimension");

    auto* kun = app.add_subcommand("kunneth", "GH of the product with a closed base");
    input(kun), out(kun), as_json(kun);
    kun->add_option("--base", o.base, "point, S1, S2 or T2");
    kun->add_option("--betti", o.betti, "base Betti numbers b0 b1 ...");

    auto* db = app.add_subcommand("dumbbell", "dumbbell model complex and monodromy");
    out(db);
    db->add_option("--n", o.n, "dimension");
    db->add_option("--r", o.r, "handle degree");
    db->add_option("--copies", o.copies, "number of rotated copies");

    auto* cert = app.add_subcommand("certify", "non-contractibility certificate");
    input(cert), out(cert);
    cert->add_option("--m", o.m, "sphere dimension for dumbbell-style input");

    auto* check = app.add_subcommand("check", "validate a document or run randomized law checks");
    input(check), out(check), as_json(check);
    check->add_option("--random", o.random, "number of random families to check");
    check->add_option("--seed", o.seed, "seed for the random families");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        diagnostic("usage", e.what(), "");
        return 1;
    }

    try {
        if (*gh) return cmd_gh(o);
        if (*front) return cmd_front(o);
        if (*spin) return cmd_spin(o);
        if (*ss) return cmd_ss(o);
        if (*psi) return cmd_psi(o);
        if (*twist) return cmd_twistspin(o);
        if (*kun) return cmd_kunneth(o);
        if (*db) return cmd_dumbbell(o);
        if (*cert) return cmd_certify(o);
        if (*check) return cmd_check(o);
    } catch (const gfh::ValidationError& e) {
        diagnostic("validation", e.what(), e.where());
        return 1;
    } catch (const json::exception& e) {
        diagnostic("validation", e.what(), "");
        return 1;
    } catch (const std::exception& e) {
        diagnostic("internal", e.what(), "");
        return 2;
    }
    return 2;
}
