#include "mqsim/circuit_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mqsim/errors.hpp"

namespace mqsim {

using nlohmann::json;

namespace {

// Reads known keys from one object and rejects the rest on finish().
class Fields {
  public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where))
    {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const char* key)
    {
        seen_.insert(key);
        return j_.contains(key);
    }

    double num(const char* key, double def)
    {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    std::optional<double> opt_num(const char* key)
    {
        if (!has(key)) return std::nullopt;
        return num(key, 0.0);
    }

    int integer(const char* key, int def)
    {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        return v.get<int>();
    }

    bool flag(const char* key, bool def)
    {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected true or false");
        return v.get<bool>();
    }

    std::string str(const char* key, const std::string& def)
    {
        if (!has(key)) return def;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    const json* sub(const char* key) { return has(key) ? &j_.at(key) : nullptr; }

    std::string path(const char* key) const { return where_ + "." + key; }

    void finish() const
    {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }

  private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

double mm_or(Fields& f, const char* key, double def_m)
{
    return units::mm_to_m(f.num(key, units::m_to_mm(def_m)));
}

std::optional<double> opt_mm(Fields& f, const char* key)
{
    if (auto v = f.opt_num(key)) return units::mm_to_m(*v);
    return std::nullopt;
}

Imperfection imperfection_at(const json& j, const std::string& where)
{
    Fields f(j, where);
    Imperfection e;
    e.phase_rad = f.num("phase_rad", 0.0);
    e.delta_beta_offset_per_m = f.num("delta_beta_offset_per_m", 0.0);
    f.finish();
    return e;
}

ModeAnalyzerSpec analyzer_at(const json& j, ModeAnalyzerSpec s, const std::string& where)
{
    Fields f(j, where);
    s.tmw_width_um = f.num("tmw_width_um", s.tmw_width_um);
    s.smw_width_um = f.num("smw_width_um", s.smw_width_um);
    s.gap_um = f.num("gap_um", s.gap_um);
    s.coupling_length_mm = f.num("coupling_length_mm", s.coupling_length_mm);
    s.sbend_length_mm = f.num("sbend_length_mm", s.sbend_length_mm);
    s.port_separation_um = f.num("port_separation_um", s.port_separation_um);
    s.design = parse_polarization(f.str("design", std::string(to_string(s.design))));
    const std::string v = f.str("variant", s.variant == AnalyzerVariant::odd_output ? "odd-output" : "even-output");
    if (v == "odd-output")
        s.variant = AnalyzerVariant::odd_output;
    else if (v == "even-output")
        s.variant = AnalyzerVariant::even_output;
    else
        throw ConfigError(f.path("variant") + ": expected odd-output or even-output");
    if (auto e = f.sub("error")) s.error = imperfection_at(*e, f.path("error"));
    f.finish();
    s.validate();
    return s;
}

TwoModeCouplerSpec coupler_at(const json& j, TwoModeCouplerSpec s, const std::string& where, bool* tune = nullptr,
                              double* lambda = nullptr)
{
    Fields f(j, where);
    if (tune) *tune = f.flag("tune", *tune);
    if (lambda) *lambda = f.num("lambda_um", *lambda);
    if (tune || lambda) f.str("type", "tmw-coupler");
    s.width_um = f.num("width_um", s.width_um);
    s.gap_um = f.num("gap_um", s.gap_um);
    s.electrode_length_mm = f.num("electrode_length_mm", s.electrode_length_mm);
    s.electrode_gap_um = f.num("electrode_gap_um", s.electrode_gap_um);
    s.voltage_V = f.num("voltage_V", s.voltage_V);
    s.orientation_wg1 = f.integer("orientation_wg1", s.orientation_wg1);
    if (auto e = f.sub("error")) s.error = imperfection_at(*e, f.path("error"));
    f.finish();
    s.validate();
    return s;
}

std::array<double, 4> four_numbers(const json& j, const std::string& where)
{
    if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected four numbers");
    std::array<double, 4> out{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected four numbers");
        out[i] = j[i].get<double>();
    }
    return out;
}

}  // namespace

Imperfection imperfection_from_json(const json& j) { return imperfection_at(j, "error"); }

ModeAnalyzerSpec analyzer_from_json(const json& j, ModeAnalyzerSpec base)
{
    return analyzer_at(j, base, "analyzer");
}

TwoModeCouplerSpec coupler_from_json(const json& j, TwoModeCouplerSpec base)
{
    return coupler_at(j, base, "coupler");
}

ModeRotatorSpec rotator_spec_from_json(const json& j, ModeRotatorSpec s)
{
    Fields f(j, "rotator");
    s.smw_width_um = f.num("smw_width_um", s.smw_width_um);
    s.coupler_length_mm = f.num("coupler_length_mm", s.coupler_length_mm);
    s.coupler_gap_um = f.num("coupler_gap_um", s.coupler_gap_um);
    s.modulator_length_mm = f.num("modulator_length_mm", s.modulator_length_mm);
    s.modulator_gap_um = f.num("modulator_gap_um", s.modulator_gap_um);
    s.lambda_um = f.num("lambda_um", s.lambda_um);
    s.pol = parse_polarization(f.str("pol", std::string(to_string(s.pol))));
    f.finish();
    s.validate();
    return s;
}

RotatorInput rotator_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("rotator: expected an object");
    json spec = j;
    RotatorInput r;
    if (j.contains("n_index")) {
        if (!j["n_index"].is_number()) throw ConfigError("rotator.n_index: expected a number");
        r.n_index = j["n_index"].get<double>();
        spec.erase("n_index");
    }
    if (j.contains("r_pm_per_V")) {
        if (!j["r_pm_per_V"].is_number()) throw ConfigError("rotator.r_pm_per_V: expected a number");
        r.r_pm_per_V = j["r_pm_per_V"].get<double>();
        spec.erase("r_pm_per_V");
    }
    if (j.contains("error")) {
        r.error = imperfection_at(j["error"], "rotator.error");
        spec.erase("error");
    }
    r.spec = rotator_spec_from_json(spec);
    return r;
}

PhasePlan plan_from_json(const json& j, PhasePlan p)
{
    Fields f(j, "plan");
    p.l1_m = mm_or(f, "l1_mm", p.l1_m);
    p.l2_m = mm_or(f, "l2_mm", p.l2_m);
    p.l3_m = mm_or(f, "l3_mm", p.l3_m);
    p.LD_m = mm_or(f, "LD_mm", p.LD_m);
    p.q1 = f.integer("q1", p.q1);
    p.q2 = f.integer("q2", p.q2);
    p.q3 = f.integer("q3", p.q3);
    p.phi_A = f.num("phi_A_rad", p.phi_A);
    p.beta_prime = f.num("beta_prime_per_m", p.beta_prime);
    p.beta_double_prime = f.num("beta_double_prime_per_m", p.beta_double_prime);
    p.beta_eTM = f.num("beta_eTM_per_m", p.beta_eTM);
    p.beta_oTM = f.num("beta_oTM_per_m", p.beta_oTM);
    p.beta_eTE = f.num("beta_eTE_per_m", p.beta_eTE);
    p.beta_oTE = f.num("beta_oTE_per_m", p.beta_oTE);
    f.finish();
    return p;
}

LengthBounds bounds_from_json(const json& j)
{
    Fields f(j, "bounds");
    LengthBounds b;
    b.l1_min_m = mm_or(f, "l1_min_mm", 0.0);
    b.l2_min_m = mm_or(f, "l2_min_mm", 0.0);
    b.l3_min_m = mm_or(f, "l3_min_mm", 0.0);
    b.l1_max_m = opt_mm(f, "l1_max_mm");
    b.l2_max_m = opt_mm(f, "l2_max_mm");
    b.l3_max_m = opt_mm(f, "l3_max_mm");
    f.finish();
    return b;
}

CnotDesignOptions design_options_from_json(const json& j)
{
    Fields f(j, "design");
    CnotDesignOptions o;
    o.lambda_um = f.num("lambda_um", o.lambda_um);
    if (auto a = f.sub("tm_analyzer")) o.tm_analyzer = analyzer_at(*a, o.tm_analyzer, f.path("tm_analyzer"));
    if (auto a = f.sub("te_analyzer")) o.te_analyzer = analyzer_at(*a, o.te_analyzer, f.path("te_analyzer"));
    if (auto c = f.sub("coupler")) o.coupler = coupler_at(*c, o.coupler, f.path("coupler"));
    o.design_tm_analyzer = f.flag("design_tm_analyzer", o.design_tm_analyzer);
    o.design_te_analyzer = f.flag("design_te_analyzer", o.design_te_analyzer);
    o.tune_coupler = f.flag("tune_coupler", o.tune_coupler);
    o.include_device_loss = f.flag("include_device_loss", o.include_device_loss);
    o.q1 = f.integer("q1", o.q1);
    o.q2 = f.integer("q2", o.q2);
    o.q3 = f.integer("q3", o.q3);
    if (auto b = f.sub("bounds")) o.bounds = bounds_from_json(*b);
    f.finish();
    return o;
}

json to_json(const ModeAnalyzerSpec& s)
{
    return json{{"tmw_width_um", s.tmw_width_um},
                {"smw_width_um", s.smw_width_um},
                {"gap_um", s.gap_um},
                {"coupling_length_mm", s.coupling_length_mm},
                {"sbend_length_mm", s.sbend_length_mm},
                {"port_separation_um", s.port_separation_um},
                {"design", std::string(to_string(s.design))},
                {"variant", s.variant == AnalyzerVariant::odd_output ? "odd-output" : "even-output"},
                {"error", {{"phase_rad", s.error.phase_rad}, {"delta_beta_offset_per_m", s.error.delta_beta_offset_per_m}}}};
}

json to_json(const TwoModeCouplerSpec& s)
{
    return json{{"width_um", s.width_um},
                {"gap_um", s.gap_um},
                {"electrode_length_mm", s.electrode_length_mm},
                {"electrode_gap_um", s.electrode_gap_um},
                {"voltage_V", s.voltage_V},
                {"orientation_wg1", s.orientation_wg1},
                {"error", {{"phase_rad", s.error.phase_rad}, {"delta_beta_offset_per_m", s.error.delta_beta_offset_per_m}}}};
}

json to_json(const ModeRotatorSpec& s)
{
    return json{{"smw_width_um", s.smw_width_um},
                {"coupler_length_mm", s.coupler_length_mm},
                {"coupler_gap_um", s.coupler_gap_um},
                {"modulator_length_mm", s.modulator_length_mm},
                {"modulator_gap_um", s.modulator_gap_um},
                {"lambda_um", s.lambda_um},
                {"pol", std::string(to_string(s.pol))}};
}

json to_json(const PhasePlan& p)
{
    return json{{"l1_mm", units::m_to_mm(p.l1_m)},
                {"l2_mm", units::m_to_mm(p.l2_m)},
                {"l3_mm", units::m_to_mm(p.l3_m)},
                {"LD_mm", units::m_to_mm(p.LD_m)},
                {"q1", p.q1},
                {"q2", p.q2},
                {"q3", p.q3},
                {"phi_A_rad", p.phi_A},
                {"beta_prime_per_m", p.beta_prime},
                {"beta_double_prime_per_m", p.beta_double_prime},
                {"beta_eTM_per_m", p.beta_eTM},
                {"beta_oTM_per_m", p.beta_oTM},
                {"beta_eTE_per_m", p.beta_eTE},
                {"beta_oTE_per_m", p.beta_oTE}};
}

DeviceInput device_from_json(const json& j)
{
    if (!j.is_object()) throw ConfigError("device: expected an object");
    DeviceInput d;
    const std::string type = j.value("type", std::string("tmw-coupler"));
    if (type == "tmw-coupler") {
        d.kind = DeviceInput::Kind::tmw_coupler;
        d.coupler = coupler_at(j, d.coupler, "device", &d.tune, &d.lambda_um);
    } else if (type == "analyzer") {
        d.kind = DeviceInput::Kind::analyzer;
        json rest = j;
        rest.erase("type");
        if (rest.contains("design_smw")) {
            if (!rest["design_smw"].is_boolean()) throw ConfigError("device.design_smw: expected true or false");
            d.design = rest["design_smw"].get<bool>();
            rest.erase("design_smw");
        }
        if (rest.contains("lambda_um")) {
            if (!rest["lambda_um"].is_number()) throw ConfigError("device.lambda_um: expected a number");
            d.lambda_um = rest["lambda_um"].get<double>();
            rest.erase("lambda_um");
        }
        d.analyzer = analyzer_at(rest, d.analyzer, "device");
    } else {
        throw ConfigError("device.type: expected tmw-coupler or analyzer, got '" + type + "'");
    }
    if (!(d.lambda_um > 0.0)) throw ConfigError("device.lambda_um must be positive");
    return d;
}

CircuitInput circuit_from_json(const json& j)
{
    Fields f(j, "circuit");
    CircuitInput c;
    if (auto d = f.sub("design")) c.design = design_options_from_json(*d);
    if (auto p = f.sub("plan")) c.plan = plan_from_json(*p);
    if (c.design && c.plan) throw ConfigError("circuit: give either design or plan, not both");
    c.solve_lengths = f.flag("solve_lengths", c.solve_lengths);
    if (auto b = f.sub("bounds")) c.bounds = bounds_from_json(*b);
    c.convention = parse_phase_convention(f.str("convention", "physical"));
    if (auto l = f.sub("lengths_mm")) {
        if (!l->is_array() || l->size() != 3) throw ConfigError("circuit.lengths_mm: expected [l1, l2, l3]");
        std::array<double, 3> v{};
        for (std::size_t i = 0; i < 3; ++i) {
            if (!(*l)[i].is_number()) throw ConfigError("circuit.lengths_mm: expected [l1, l2, l3]");
            v[i] = (*l)[i].get<double>();
        }
        c.lengths_mm = v;
    }
    if (auto e = f.sub("phase_errors_rad")) c.phase_errors_rad = four_numbers(*e, f.path("phase_errors_rad"));
    c.ideal = f.flag("ideal", c.ideal);
    f.finish();
    if (!c.design && !c.plan && !c.ideal) c.design = CnotDesignOptions{};
    return c;
}

PlanInput plan_input_from_json(const json& j)
{
    Fields f(j, "phase plan");
    PlanInput in;
    if (auto p = f.sub("plan")) in.plan = plan_from_json(*p);
    else throw ConfigError("phase plan: missing 'plan'");
    if (auto b = f.sub("bounds")) in.bounds = bounds_from_json(*b);
    in.convention = parse_phase_convention(f.str("convention", "physical"));
    f.finish();
    return in;
}

json read_json_file(const std::string& path, std::string* text)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    const std::string s = os.str();
    if (text) *text = s;
    try {
        return json::parse(s);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

}  // namespace mqsim
