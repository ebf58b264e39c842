#include "output.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mqsim/errors.hpp"
#include "text_util.hpp"

namespace mqsim::cli {

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

// -0 prints as 0
double tidy(double v) { return v == 0.0 ? 0.0 : v; }

std::string cell_text(const Cell& c)
{
    if (std::holds_alternative<double>(c)) return detail::fmt12(tidy(std::get<double>(c)));
    if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
    if (std::holds_alternative<std::string>(c)) return csv_field(std::get<std::string>(c));
    return "";
}

nlohmann::json cell_json(const Cell& c)
{
    if (std::holds_alternative<double>(c)) return tidy(std::get<double>(c));
    if (std::holds_alternative<long long>(c)) return std::get<long long>(c);
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return nullptr;
}

}  // namespace

std::string render(const Run& run, const Table& t)
{
    std::ostringstream os;
    if (run.format == Format::csv) {
        os << "# command: " << run.command_line << "\n";
        os << "# config_hash: " << run.config_hash << "\n";
        os << "# units: " << t.units << "\n";
        for (const auto& [k, v] : t.notes)
            os << "# " << k << ": " << v << "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i)
            os << (i ? "," : "") << t.columns[i];
        os << "\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? "," : "") << cell_text(row[i]);
            os << "\n";
        }
        return os.str();
    }
    nlohmann::ordered_json j;
    j["command"] = run.command_line;
    j["config_hash"] = run.config_hash;
    j["units"] = t.units;
    nlohmann::ordered_json notes = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.notes)
        notes[k] = v;
    j["notes"] = notes;
    j["columns"] = t.columns;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& c : row)
            r.push_back(cell_json(c));
        rows.push_back(r);
    }
    j["rows"] = rows;
    if (!t.report.is_null()) j["report"] = t.report;
    return j.dump(2) + "\n";
}

void emit(Run& run, const Table& t)
{
    const std::string text = render(run, t);
    if (!run.out_dir) {
        std::cout << text;
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(*run.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + *run.out_dir + "': " + ec.message());
    const auto path = std::filesystem::path(*run.out_dir) / (t.name + (run.format == Format::csv ? ".csv" : ".json"));
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    run.written.push_back(path.string());
}

}  // namespace mqsim::cli
