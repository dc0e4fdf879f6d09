#include "jsonl.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <system_error>

#include "suggestkit/error.hpp"

namespace suggestkit::detail {

void for_each_record(std::string_view text, std::string_view source,
                     const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        pos = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) {
            if (end == text.size()) break;
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::Malformed, std::string(source) + " line " +
                                                  std::to_string(line_no) + ": malformed record (" +
                                                  e.what() + ")");
        }
        if (!j.is_object()) {
            throw Error(ErrorCode::Malformed, std::string(source) + " line " +
                                                  std::to_string(line_no) +
                                                  ": record is not an object");
        }
        try {
            fn(j, line_no);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Malformed, std::string(source) + " line " +
                                                  std::to_string(line_no) + ": " + e.what());
        }
        if (end == text.size()) break;
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string required_string(const nlohmann::json& j, const char* field, std::string_view where) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        throw Error(ErrorCode::InvalidInput,
                    std::string(where) + ": missing string field \"" + field + "\"");
    }
    auto value = it->get<std::string>();
    if (trim(value).empty()) {
        throw Error(ErrorCode::InvalidInput,
                    std::string(where) + ": empty required field \"" + field + "\"");
    }
    return value;
}

std::string optional_string(const nlohmann::json& j, const char* field, std::string def) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return def;
    return it->get<std::string>();
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::string dump_line(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict) + "\n";
}

}  // namespace suggestkit::detail
