#include "text_util.hpp"

#include <cstdio>
#include <set>

#include "mqsim/errors.hpp"

namespace mqsim::detail {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<IniSection> parse_ini(std::string_view text)
{
    std::vector<IniSection> sections;
    std::set<std::string> seen_sections;
    std::set<std::string> seen_keys;
    int line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;

        if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            std::string name(trim(line.substr(1, line.size() - 2)));
            if (!seen_sections.insert(name).second) throw ConfigError("duplicate section [" + name + "]");
            sections.push_back({name, {}});
            seen_keys.clear();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
        if (sections.empty()) throw ConfigError("line " + std::to_string(line_no) + ": key outside a section");
        std::string key(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (!seen_keys.insert(key).second)
            throw ConfigError("duplicate key '" + key + "' in [" + sections.back().name + "]");
        sections.back().entries.emplace_back(std::move(key), std::move(value));
    }
    return sections;
}

double parse_double(const std::string& value, const std::string& key)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != value.size()) throw ConfigError("key '" + key + "': '" + value + "' is not a number");
    return v;
}

std::string fmt12(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace mqsim::detail
