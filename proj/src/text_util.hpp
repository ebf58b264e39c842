#pragma once

// Small text helpers shared by the config readers and report writers.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mqsim::detail {

struct IniSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
};

// '#' and ';' start comments. Keys outside any section are an error, as are duplicates.
std::vector<IniSection> parse_ini(std::string_view text);

double parse_double(const std::string& value, const std::string& key);

// %.12g, the precision used for all CSV output.
std::string fmt12(double v);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace mqsim::detail
