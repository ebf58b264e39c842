#pragma once

// Tables written as CSV (with '#' header comments) or JSON, to a directory or stdout.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace mqsim::cli {

enum class Format { csv, json };

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct Table {
    std::string name;  // file stem
    std::string units;
    std::vector<std::pair<std::string, std::string>> notes;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::json report;  // JSON output only; CSV readers get the notes

    void note(std::string key, std::string value) { notes.emplace_back(std::move(key), std::move(value)); }
};

struct Run {
    std::string command_line;  // argv without --out, so runs into different directories compare equal
    std::string config_hash;
    Format format = Format::csv;
    std::optional<std::string> out_dir;
    std::vector<std::string> written;
};

std::string render(const Run& run, const Table& t);

// Writes <out_dir>/<name>.<ext>, or to stdout when no directory was given.
void emit(Run& run, const Table& t);

}  // namespace mqsim::cli
