#include "mqsim/material.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mqsim/errors.hpp"
#include "mqsim/units.hpp"
#include "text_util.hpp"

namespace mqsim {

std::string_view to_string(Polarization pol) { return pol == Polarization::TE ? "TE" : "TM"; }

Polarization parse_polarization(std::string_view text)
{
    if (text == "TE" || text == "te") return Polarization::TE;
    if (text == "TM" || text == "tm") return Polarization::TM;
    throw ConfigError("unknown polarization '" + std::string(text) + "' (expected TE or TM)");
}

double SellmeierSet::index(double lambda_um) const
{
    if (!in_window(lambda_um)) {
        std::ostringstream msg;
        msg << "wavelength " << lambda_um << " um outside Sellmeier window [" << lambda_min_um << ", "
            << lambda_max_um << "] um (" << source << ")";
        throw DomainError(msg.str());
    }
    const double l2 = lambda_um * lambda_um;
    double n2 = a - ir_um2 * l2;
    for (const auto& t : terms)
        n2 += t.b * l2 / (l2 - t.c_um2);
    return std::sqrt(n2);
}

double TiIndiffusionParams::xi(double lambda_um) const
{
    if (!(lambda_um > 0.0)) throw DomainError("xi: wavelength must be positive");
    return xi_a + xi_b / (lambda_um * lambda_um);
}

void TiIndiffusionParams::validate() const
{
    if (!(thickness_um > 0.0)) throw ConfigError("indiffusion: thickness must be positive");
    if (!(diffusion_length_um > 0.0)) throw ConfigError("indiffusion: diffusion length must be positive");
    for (double rho : {rho_ordinary, rho_extraordinary})
        if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("indiffusion: rho must lie in (0, 1)");
    if (!(xi_a > 0.0) || !(xi_b >= 0.0)) throw ConfigError("indiffusion: xi coefficients must keep xi positive");
    if (!(reference_wavelength_um > 0.0)) throw ConfigError("indiffusion: reference wavelength must be positive");
}

void PockelsTensor::validate() const
{
    if (!(r13_pm_per_V > 0.0 && r33_pm_per_V > 0.0)) throw ConfigError("pockels: coefficients must be positive");
    if (!(r33_pm_per_V > r13_pm_per_V)) throw ConfigError("pockels: expected r33 > r13");
}

MaterialModel MaterialModel::congruent_lithium_niobate()
{
    MaterialModel m;
    m.ordinary = {"Zelmon 1997 congruent LiNbO3 n_o", 0.4, 5.0, 1.0,
                  {{2.6734, 0.01764}, {1.2290, 0.05914}, {12.614, 474.60}}, 0.0};
    m.extraordinary = {"Zelmon 1997 congruent LiNbO3 n_e", 0.4, 5.0, 1.0,
                       {{2.9804, 0.02047}, {0.5981, 0.0666}, {8.9543, 416.08}}, 0.0};
    return m;
}

void MaterialModel::validate() const
{
    for (const auto* s : {&ordinary, &extraordinary}) {
        if (!(s->lambda_max_um > s->lambda_min_um && s->lambda_min_um > 0.0))
            throw ConfigError("sellmeier: empty or invalid validity window");
    }
    indiffusion.validate();
    pockels.validate();
}

double MaterialModel::bulk_index(double lambda_um, Polarization pol) const
{
    return pol == Polarization::TE ? ordinary.index(lambda_um) : extraordinary.index(lambda_um);
}

double MaterialModel::peak_delta_n(double lambda_um, Polarization pol) const
{
    if (!(lambda_um > 0.0)) throw DomainError("delta_n: wavelength must be positive");
    const auto& p = indiffusion;
    const double rho = pol == Polarization::TE ? p.rho_ordinary : p.rho_extraordinary;
    double dn = 2.0 * p.thickness_um * rho / (std::sqrt(units::pi) * p.diffusion_length_um);
    if (p.policy == DispersionPolicy::multiplicative) dn *= p.xi(lambda_um) / p.xi(p.reference_wavelength_um);
    return dn;
}

double MaterialModel::delta_n(double width_um, double lambda_um, Polarization pol) const
{
    if (!(width_um > 0.0)) throw DomainError("delta_n: film width must be positive");
    return peak_delta_n(lambda_um, pol) * std::erf(width_um / (2.0 * indiffusion.diffusion_length_um));
}

double eo_index_shift(double n, double r_pm_per_V, double volts, double gap_um)
{
    if (!(gap_um > 0.0)) throw DomainError("eo_index_shift: electrode gap must be positive");
    const double field = volts / units::um_to_m(gap_um);  // V/m
    return -0.5 * n * n * n * (r_pm_per_V * units::pm_per_V) * field;
}

// ---------------------------------------------------------------------------
// Config file

namespace {

void parse_sellmeier(const detail::IniSection& sec, SellmeierSet& s)
{
    s.terms.clear();
    std::map<int, SellmeierSet::Term> terms;
    for (const auto& [key, value] : sec.entries) {
        if (key == "source") {
            s.source = value;
        } else if (key == "lambda_min_um") {
            s.lambda_min_um = detail::parse_double(value, key);
        } else if (key == "lambda_max_um") {
            s.lambda_max_um = detail::parse_double(value, key);
        } else if (key == "a") {
            s.a = detail::parse_double(value, key);
        } else if (key == "ir_um2") {
            s.ir_um2 = detail::parse_double(value, key);
        } else if (key.size() == 2 && (key[0] == 'b' || key[0] == 'c') && key[1] >= '1' && key[1] <= '9') {
            auto& t = terms[key[1] - '0'];
            (key[0] == 'b' ? t.b : t.c_um2) = detail::parse_double(value, key);
        } else {
            throw ConfigError("unknown key '" + key + "' in [" + sec.name + "]");
        }
    }
    for (const auto& [i, t] : terms)
        s.terms.push_back(t);
}

}  // namespace

MaterialModel MaterialModel::from_config(std::string_view text)
{
    MaterialModel m = congruent_lithium_niobate();
    for (const auto& sec : detail::parse_ini(text)) {
        if (sec.name == "sellmeier.ordinary") {
            parse_sellmeier(sec, m.ordinary);
        } else if (sec.name == "sellmeier.extraordinary") {
            parse_sellmeier(sec, m.extraordinary);
        } else if (sec.name == "indiffusion") {
            auto& p = m.indiffusion;
            for (const auto& [key, value] : sec.entries) {
                if (key == "thickness_um") p.thickness_um = detail::parse_double(value, key);
                else if (key == "diffusion_length_um") p.diffusion_length_um = detail::parse_double(value, key);
                else if (key == "rho_ordinary") p.rho_ordinary = detail::parse_double(value, key);
                else if (key == "rho_extraordinary") p.rho_extraordinary = detail::parse_double(value, key);
                else if (key == "xi_a") p.xi_a = detail::parse_double(value, key);
                else if (key == "xi_b") p.xi_b = detail::parse_double(value, key);
                else if (key == "reference_wavelength_um") p.reference_wavelength_um = detail::parse_double(value, key);
                else if (key == "dispersion_policy") {
                    if (value == "off") p.policy = DispersionPolicy::off;
                    else if (value == "multiplicative") p.policy = DispersionPolicy::multiplicative;
                    else throw ConfigError("dispersion_policy must be 'off' or 'multiplicative'");
                } else {
                    throw ConfigError("unknown key '" + key + "' in [indiffusion]");
                }
            }
        } else if (sec.name == "pockels") {
            for (const auto& [key, value] : sec.entries) {
                if (key == "r13_pm_per_V") m.pockels.r13_pm_per_V = detail::parse_double(value, key);
                else if (key == "r33_pm_per_V") m.pockels.r33_pm_per_V = detail::parse_double(value, key);
                else throw ConfigError("unknown key '" + key + "' in [pockels]");
            }
        } else {
            throw ConfigError("unknown section [" + sec.name + "]");
        }
    }
    m.validate();
    return m;
}

MaterialModel MaterialModel::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open material config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_config(buf.str());
}

std::string MaterialModel::to_config() const
{
    std::ostringstream out;
    // Shortest text that reads back to the same double.
    auto num = [](double v) {
        char buf[32];
        const auto r = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, r.ptr);
    };
    auto write_sellmeier = [&](const char* name, const SellmeierSet& s) {
        out << "[sellmeier." << name << "]\n";
        out << "source = " << s.source << "\n";
        out << "lambda_min_um = " << num(s.lambda_min_um) << "\n";
        out << "lambda_max_um = " << num(s.lambda_max_um) << "\n";
        out << "a = " << num(s.a) << "\n";
        for (std::size_t i = 0; i < s.terms.size(); ++i) {
            out << "b" << i + 1 << " = " << num(s.terms[i].b) << "\n";
            out << "c" << i + 1 << " = " << num(s.terms[i].c_um2) << "\n";
        }
        out << "ir_um2 = " << num(s.ir_um2) << "\n\n";
    };
    write_sellmeier("ordinary", ordinary);
    write_sellmeier("extraordinary", extraordinary);
    const auto& p = indiffusion;
    out << "[indiffusion]\n"
        << "thickness_um = " << num(p.thickness_um) << "\n"
        << "diffusion_length_um = " << num(p.diffusion_length_um) << "\n"
        << "rho_ordinary = " << num(p.rho_ordinary) << "\n"
        << "rho_extraordinary = " << num(p.rho_extraordinary) << "\n"
        << "xi_a = " << num(p.xi_a) << "\n"
        << "xi_b = " << num(p.xi_b) << "\n"
        << "dispersion_policy = " << (p.policy == DispersionPolicy::off ? "off" : "multiplicative") << "\n"
        << "reference_wavelength_um = " << num(p.reference_wavelength_um) << "\n\n";
    out << "[pockels]\n"
        << "r13_pm_per_V = " << num(pockels.r13_pm_per_V) << "\n"
        << "r33_pm_per_V = " << num(pockels.r33_pm_per_V) << "\n";
    return out.str();
}

}  // namespace mqsim
