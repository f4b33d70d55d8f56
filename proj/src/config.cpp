#include "ilat/config.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ilat {

namespace {
using nlohmann::json;

[[noreturn]] void config_fail(const std::string& field, const std::string& reason) {
    fail(ErrorKind::ConfigError, field + ": " + reason);
}

double num_or_inf(const json& j, const std::string& field) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    config_fail(field, "expected a number or \"inf\"/\"-inf\"");
}

DistSpec dist_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("family")) config_fail(field, "expected a distribution object");
    DistSpec s;
    s.family = dist_family_from_string(j["family"].get<std::string>());
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            s.params[it.key()] = num_or_inf(it.value(), field + ".params." + it.key());
    }
    try {
        Distribution check(s);
    } catch (const Error& e) {
        config_fail(field, e.what());
    }
    return s;
}

LocalMap map_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("family")) config_fail(field, "expected a map object");
    LocalMap m;
    m.family = map_family_from_string(j["family"].get<std::string>());
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            m.params[it.key()] = num_or_inf(it.value(), field + ".params." + it.key());
    }
    try {
        validate(m);
    } catch (const Error& e) {
        config_fail(field, e.what());
    }
    return m;
}

ExperimentKind experiment_from_string(const std::string& s) {
    static const std::map<std::string, ExperimentKind> lut = {
        {"detailed_balance", ExperimentKind::detailed_balance},
        {"detailed_balance_star", ExperimentKind::detailed_balance_star},
        {"invariance", ExperimentKind::invariance},
        {"burke", ExperimentKind::burke},
        {"ergodicity_reconstruction", ExperimentKind::ergodicity_reconstruction},
        {"ultradiscretization", ExperimentKind::ultradiscretization},
        {"correspondence", ExperimentKind::correspondence},
        {"stochastic_quadrant", ExperimentKind::stochastic_quadrant},
        {"simulate", ExperimentKind::simulate},
    };
    auto it = lut.find(s);
    if (it == lut.end()) config_fail("experiment", "unknown experiment '" + s + "'");
    return it->second;
}

void require_measure(const ExperimentConfig& c, const std::string& slot) {
    if (!c.measures.count(slot))
        config_fail("measures." + slot, "required for " + std::string(to_string(c.experiment)));
}

void require_model(const ExperimentConfig& c, std::initializer_list<MapFamily> allowed) {
    if (!c.model) config_fail("model", "required for " + std::string(to_string(c.experiment)));
    for (MapFamily f : allowed)
        if (c.model->family == f) return;
    config_fail("model.family", std::string(to_string(c.model->family)) + " is not usable with " +
                                    to_string(c.experiment));
}

void validate_config(const ExperimentConfig& c) {
    switch (c.experiment) {
        case ExperimentKind::detailed_balance:
            require_model(c, {MapFamily::udKdV, MapFamily::dKdV, MapFamily::K_udT, MapFamily::K_dT});
            require_measure(c, "mu");
            require_measure(c, "nu");
            break;
        case ExperimentKind::detailed_balance_star:
            require_model(c, {MapFamily::udTodaStar, MapFamily::dTodaStar});
            require_measure(c, "mu");
            require_measure(c, "nu");
            require_measure(c, "mu_tilde");
            require_measure(c, "nu_tilde");
            break;
        case ExperimentKind::invariance: {
            require_model(c, {MapFamily::udKdV, MapFamily::dKdV, MapFamily::udToda, MapFamily::dToda});
            require_measure(c, "mu");
            if (c.model->family == MapFamily::dKdV) {
                double a = c.model->param("alpha"), b = c.model->param("beta");
                if (a != b && a > 0.0 && b > 0.0)
                    config_fail("model.params",
                                "invariance for dKdV needs alpha*beta = 0 or alpha = beta");
            }
            bool type2 = c.model->family == MapFamily::udToda || c.model->family == MapFamily::dToda;
            if (type2) require_measure(c, "mu_tilde");
            break;
        }
        case ExperimentKind::burke:
            require_model(c, {MapFamily::udKdV, MapFamily::dKdV, MapFamily::udToda, MapFamily::dToda});
            require_measure(c, "mu");
            require_measure(c, "nu");
            break;
        case ExperimentKind::ergodicity_reconstruction:
            require_model(c, {MapFamily::udKdV, MapFamily::dKdV});
            require_measure(c, "mu");
            break;
        case ExperimentKind::ultradiscretization:
            if (c.target != "stExp_from_GIG" && c.target != "sExp_from_Gam")
                config_fail("target", "must be stExp_from_GIG or sExp_from_Gam");
            break;
        case ExperimentKind::correspondence:
            if (c.target != "ultra" && c.target != "discrete")
                config_fail("target", "must be ultra or discrete");
            break;
        case ExperimentKind::stochastic_quadrant:
            require_model(c, {MapFamily::R_DLPP, MapFamily::R_RPs, MapFamily::R_RPe, MapFamily::R_HSV});
            require_measure(c, "boundary_x");
            require_measure(c, "boundary_u");
            if (c.model->family != MapFamily::R_HSV) require_measure(c, "bulk");
            break;
        case ExperimentKind::simulate:
            require_model(c, {MapFamily::udKdV, MapFamily::dKdV, MapFamily::udToda, MapFamily::dToda});
            if (c.initial.empty() && !c.measures.count("mu"))
                config_fail("initial", "simulate needs an initial array or measures.mu");
            break;
    }
}

ExperimentConfig parse_one(const json& j) {
    if (!j.is_object()) config_fail("(root)", "experiment entry must be an object");
    ExperimentConfig c;
    if (!j.contains("experiment")) config_fail("experiment", "required");
    c.experiment = experiment_from_string(j["experiment"].get<std::string>());
    if (j.contains("label")) c.label = j["label"].get<std::string>();
    if (j.contains("model")) c.model = map_from_json(j["model"], "model");
    if (j.contains("measures")) {
        if (!j["measures"].is_object()) config_fail("measures", "must be an object");
        for (auto it = j["measures"].begin(); it != j["measures"].end(); ++it)
            c.measures.emplace(it.key(), dist_from_json(it.value(), "measures." + it.key()));
    }
    if (!j.contains("mc") || !j["mc"].is_object()) config_fail("mc", "required");
    const json& mc = j["mc"];
    if (!mc.contains("seed")) config_fail("mc.seed", "required");
    if (!mc["seed"].is_number_unsigned() && !mc["seed"].is_number_integer())
        config_fail("mc.seed", "must be an integer");
    c.seed = mc["seed"].get<std::uint64_t>();
    auto size_field = [&](const char* name, std::size_t fallback) {
        if (!mc.contains(name)) return fallback;
        if (!mc[name].is_number() || mc[name].get<double>() < 1)
            config_fail(std::string("mc.") + name, "must be a positive integer");
        return mc[name].get<std::size_t>();
    };
    c.samples = size_field("samples", c.samples);
    c.window = size_field("window", c.window);
    c.margin = mc.contains("margin") ? mc["margin"].get<std::size_t>() : c.margin;
    c.time_steps = size_field("time_steps", c.time_steps);
    c.n_fields = size_field("n_fields", c.n_fields);
    if (j.contains("test")) {
        const json& t = j["test"];
        if (t.contains("alpha")) {
            c.alpha = t["alpha"].get<double>();
            if (!(c.alpha > 0 && c.alpha < 1)) config_fail("test.alpha", "must lie in (0,1)");
        }
        if (t.contains("bins")) c.bins = t["bins"].get<std::size_t>();
        if (t.contains("eps_list")) {
            c.eps_list.clear();
            for (const auto& e : t["eps_list"]) c.eps_list.push_back(e.get<double>());
        }
    }
    if (j.contains("params")) {
        for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
            c.params[it.key()] = num_or_inf(it.value(), "params." + it.key());
    }
    if (j.contains("target")) c.target = j["target"].get<std::string>();
    if (j.contains("initial")) {
        for (const auto& v : j["initial"]) c.initial.push_back(v.get<double>());
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        if (o.contains("path")) c.out_path = o["path"].get<std::string>();
        if (o.contains("format")) {
            c.format = o["format"].get<std::string>();
            if (c.format != "json" && c.format != "csv")
                config_fail("output.format", "must be json or csv");
        }
    }
    validate_config(c);
    return c;
}

}  // namespace

const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::detailed_balance: return "detailed_balance";
        case ExperimentKind::detailed_balance_star: return "detailed_balance_star";
        case ExperimentKind::invariance: return "invariance";
        case ExperimentKind::burke: return "burke";
        case ExperimentKind::ergodicity_reconstruction: return "ergodicity_reconstruction";
        case ExperimentKind::ultradiscretization: return "ultradiscretization";
        case ExperimentKind::correspondence: return "correspondence";
        case ExperimentKind::stochastic_quadrant: return "stochastic_quadrant";
        case ExperimentKind::simulate: return "simulate";
    }
    return "?";
}

const DistSpec& ExperimentConfig::measure(const std::string& slot) const {
    auto it = measures.find(slot);
    if (it == measures.end()) fail(ErrorKind::ConfigError, "measures." + slot + ": required");
    return it->second;
}

std::optional<DistSpec> ExperimentConfig::measure_opt(const std::string& slot) const {
    auto it = measures.find(slot);
    if (it == measures.end()) return std::nullopt;
    return it->second;
}

std::vector<ExperimentConfig> parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        config_fail("(document)", e.what());
    }
    std::vector<ExperimentConfig> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(parse_one(e));
    } else if (j.is_object() && j.contains("experiments")) {
        for (const auto& e : j["experiments"]) out.push_back(parse_one(e));
    } else {
        out.push_back(parse_one(j));
    }
    if (out.empty()) config_fail("(document)", "no experiments");
    return out;
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_fail("(file)", "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

TestReport label_report(TestReport r, const ExperimentConfig& c) {
    if (!c.label.empty()) r.name = c.label;
    if (c.model) r.details.emplace("model_family_id", static_cast<double>(c.model->family));
    return r;
}

RunOutcome run_simulate(const ExperimentConfig& c) {
    LatticeWindow w;
    w.model = *c.model;
    bool type2 = c.model->family == MapFamily::udToda || c.model->family == MapFamily::dToda;
    w.kind = type2 ? WindowKind::typeII : WindowKind::typeI;
    if (!c.initial.empty()) {
        w.values = c.initial;
    } else {
        RngStream rng(c.seed);
        Distribution mu(c.measure("mu"));
        std::size_t slots = type2 ? 2 * c.window : c.window;
        if (type2 && c.measures.count("mu_tilde")) {
            Distribution mut(c.measure("mu_tilde"));
            for (std::size_t i = 0; i < c.window; ++i) {
                w.values.push_back(mut.sample(rng));
                w.values.push_back(mu.sample(rng));
            }
        } else {
            w.values = mu.sample_n(rng, slots);
        }
    }
    SpaceTimeField field = evolve_multi(w, c.time_steps, c.margin);
    RunOutcome out;
    std::string path = c.out_path.empty() ? "field.csv" : c.out_path;
    atomic_write(path, field.to_csv());
    out.artifacts.push_back(path);
    return out;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& c) {
    validate_config(c);
    RunOutcome out;
    RngStream rng(c.seed);
    switch (c.experiment) {
        case ExperimentKind::detailed_balance:
            out.reports.push_back(label_report(
                check_detailed_balance(*c.model, c.measure("mu"), c.measure("nu"), c.samples, rng,
                                       c.alpha, c.bins),
                c));
            break;
        case ExperimentKind::detailed_balance_star:
            out.reports.push_back(label_report(
                check_detailed_balance_star(*c.model, c.measure("mu"), c.measure("nu"),
                                            c.measure("mu_tilde"), c.measure("nu_tilde"),
                                            c.samples, rng, c.alpha, c.bins),
                c));
            break;
        case ExperimentKind::invariance:
            out.reports.push_back(label_report(
                check_invariance(*c.model, c.measure("mu"), c.measure_opt("mu_tilde"), c.window,
                                 c.margin, c.n_fields, rng, c.alpha, c.measure_opt("nu")),
                c));
            break;
        case ExperimentKind::burke:
            out.reports.push_back(label_report(check_burke(*c.model, c.measure("mu"),
                                                           c.measure("nu"), c.window,
                                                           c.time_steps, rng, c.alpha),
                                               c));
            break;
        case ExperimentKind::ergodicity_reconstruction: {
            DistSpec nu = c.measures.count("nu")
                              ? c.measure("nu")
                              : predicted_carrier_law(*c.model, c.measure("mu"), std::nullopt);
            out.reports.push_back(label_report(
                check_ergodicity_reconstruction(*c.model, c.measure("mu"), nu, c.window,
                                                c.time_steps, rng, c.n_fields > 0 ? c.n_fields : 100),
                c));
            break;
        }
        case ExperimentKind::ultradiscretization: {
            UdParams p;
            p.lambda = c.params.count("lambda") ? c.params.at("lambda") : 1.0;
            p.c = c.params.count("c") ? c.params.at("c") : 0.0;
            p.L = c.params.count("L") ? c.params.at("L") : kInf;
            UdTarget t = c.target == "stExp_from_GIG" ? UdTarget::stExp_from_GIG
                                                      : UdTarget::sExp_from_Gam;
            out.reports.push_back(
                label_report(check_ultradiscretization(t, p, c.eps_list, c.samples, rng), c));
            break;
        }
        case ExperimentKind::correspondence: {
            CorrespondenceParams p;
            if (c.params.count("lambda1")) p.lambda1 = c.params.at("lambda1");
            if (c.params.count("lambda2")) p.lambda2 = c.params.at("lambda2");
            if (c.params.count("c")) p.c = c.params.at("c");
            if (c.params.count("J")) p.J = c.params.at("J");
            if (c.params.count("alpha")) p.alpha = c.params.at("alpha");
            CorrespondenceSide side = c.target == "ultra" ? CorrespondenceSide::ultra
                                                          : CorrespondenceSide::discrete;
            if (side == CorrespondenceSide::discrete && !c.params.count("c")) p.c = 1.0;
            out.reports.push_back(
                label_report(check_correspondence(side, p, c.samples, c.eps_list, rng), c));
            break;
        }
        case ExperimentKind::stochastic_quadrant: {
            DistSpec bulk = c.model->family == MapFamily::R_HSV
                                ? make_spec(DistFamily::Uniform01, {})
                                : c.measure("bulk");
            out.reports.push_back(label_report(
                check_stochastic_quadrant(*c.model, c.measure("boundary_x"),
                                          c.measure("boundary_u"), bulk, c.window, c.time_steps,
                                          c.n_fields, rng, c.alpha),
                c));
            break;
        }
        case ExperimentKind::simulate: return run_simulate(c);
    }
    for (const auto& r : out.reports) out.all_pass = out.all_pass && r.pass;
    return out;
}

std::string reports_to_json(const std::vector<TestReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(json::parse(r.to_json_string()));
    return arr.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<TestReport>& reports) {
    std::ostringstream os;
    os << "experiment,model,statistic_name,value,threshold,pass,n,seed\n";
    for (const auto& r : reports) {
        std::string model;
        auto it = r.details.find("model_family_id");
        if (it != r.details.end())
            model = to_string(static_cast<MapFamily>(static_cast<int>(it->second)));
        os << r.name << ',' << model << ',' << r.statistic_name << ',' << r.statistic << ','
           << r.threshold << ',' << (r.pass ? 1 : 0) << ',' << r.n_samples << ',' << r.seed
           << '\n';
    }
    return os.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path dir = target.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (target.filename().string() + ".tmp." +
                          std::to_string(static_cast<unsigned>(::getpid())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::ConfigError, "cannot write to '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            fail(ErrorKind::ConfigError, "failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::ConfigError, "cannot move output into place at '" + path + "'");
    }
}

std::string emit_plot_data(const TestReport& report, PlotKind kind) {
    if (kind != PlotKind::ks_curve)
        fail(ErrorKind::KindMismatch, "reports provide ks_curve data only");
    std::ostringstream os;
    os << "eps,ks\n";
    bool any = false;
    for (std::size_t i = 0;; ++i) {
        auto eit = report.details.find("eps_" + std::to_string(i));
        auto kit = report.details.find("ks_eps_" + std::to_string(i));
        if (eit == report.details.end() || kit == report.details.end()) break;
        os << eit->second << ',' << kit->second << '\n';
        any = true;
    }
    if (!any) fail(ErrorKind::KindMismatch, "report carries no KS curve");
    return os.str();
}

std::string emit_plot_data(const SpaceTimeField& field, PlotKind kind) {
    if (kind != PlotKind::field_heatmap)
        fail(ErrorKind::KindMismatch, "fields provide field_heatmap data only");
    std::ostringstream os;
    os << "t,n,value\n";
    for (std::size_t t = 0; t < field.config.size(); ++t) {
        const LatticeWindow& w = field.config[t];
        if (w.kind == WindowKind::typeI) {
            for (long n = w.offset; n <= w.last_index(); ++n)
                os << t << ',' << n << ',' << w.x_at(n) << '\n';
        } else {
            for (long i = w.offset; i <= w.last_index(); ++i) {
                auto [a, b] = w.pair_at(i);
                os << t << ',' << 2 * i << ',' << a << '\n';
                os << t << ',' << 2 * i + 1 << ',' << b << '\n';
            }
        }
    }
    return os.str();
}

std::string emit_plot_data(const std::vector<double>& sample, const DistSpec& law,
                           std::size_t bins, PlotKind kind) {
    if (kind != PlotKind::marginal_hist)
        fail(ErrorKind::KindMismatch, "samples provide marginal_hist data only");
    if (sample.empty()) fail(ErrorKind::EmptySample, "empty sample");
    if (bins < 1) fail(ErrorKind::InvalidParams, "bins must be >= 1");
    Distribution d(law);
    double lo = *std::min_element(sample.begin(), sample.end());
    double hi = *std::max_element(sample.begin(), sample.end());
    if (hi <= lo) hi = lo + 1.0;
    double h = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : sample) {
        std::size_t b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / h));
        counts[b] += 1;
    }
    std::ostringstream os;
    os << "bin_left,bin_right,count,expected\n";
    for (std::size_t b = 0; b < bins; ++b) {
        double l = lo + h * static_cast<double>(b);
        double r = l + h;
        double expect = (d.cdf(r) - d.cdf(b == 0 ? l - 1e-12 : l)) *
                        static_cast<double>(sample.size());
        os << l << ',' << r << ',' << counts[b] << ',' << expect << '\n';
    }
    return os.str();
}

LatticeWindow window_from_json_text(const std::string& text) {
    json j = json::parse(text);
    LatticeWindow w;
    std::string kind = j.value("kind", "typeI");
    if (kind == "typeI") {
        w.kind = WindowKind::typeI;
    } else if (kind == "typeII") {
        w.kind = WindowKind::typeII;
    } else {
        config_fail("kind", "must be typeI or typeII");
    }
    w.offset = j.value("offset", 0L);
    if (!j.contains("model")) config_fail("model", "required");
    w.model = map_from_json(j["model"], "model");
    if (!j.contains("values") || !j["values"].is_array())
        config_fail("values", "required array");
    for (const auto& v : j["values"]) w.values.push_back(v.get<double>());
    w.check();
    return w;
}

}  // namespace ilat
