#include "csv.hpp"

#include <fstream>
#include <sstream>

#include "edg/errors.hpp"

namespace edg::detail {

std::vector<CsvRow> parse_csv(std::string_view text, const std::string& source) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool quoted = false;
    bool row_has_content = false;
    std::size_t line = 1;

    auto end_row = [&] {
        row.push_back(std::move(field));
        field.clear();
        if (row_has_content || row.size() > 1) rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                row_has_content = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                end_row();
                ++line;
                break;
            default:
                field.push_back(c);
                row_has_content = true;
        }
    }
    if (quoted) throw SchemaError(source + ":" + std::to_string(line) + ": unterminated quoted field");
    if (row_has_content || !row.empty()) end_row();
    return rows;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

std::vector<CsvRow> read_csv_file(const std::filesystem::path& path) {
    return parse_csv(read_text_file(path), path.string());
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto pos = s.find(sep, start);
        const auto piece = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (!piece.empty()) out.push_back(piece);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace edg::detail
