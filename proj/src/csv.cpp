#include "crowdscore/csv.hpp"

#include <fstream>
#include <sstream>

#include "crowdscore/errors.hpp"

namespace crowdscore::csv {

std::vector<std::string> parse_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            if (!cur.empty())
                throw ParseError(line_no, "-", "quote inside unquoted field");
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
        ++i;
    }
    if (quoted) throw ParseError(line_no, "-", "unterminated quoted field");
    fields.push_back(std::move(cur));
    return fields;
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_record(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape_field(fields[i]);
    }
    return out;
}

std::vector<std::vector<std::string>> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFoundError(path);

    std::vector<std::vector<std::string>> records;
    std::string physical, record;
    std::size_t line_no = 0, record_start = 0;
    bool in_quotes = false;

    auto quote_parity = [](const std::string& s, bool state) {
        for (char c : s)
            if (c == '"') state = !state;
        return state;
    };

    while (std::getline(in, physical)) {
        ++line_no;
        if (!physical.empty() && physical.back() == '\r') physical.pop_back();
        if (!in_quotes) {
            record = physical;
            record_start = line_no;
        } else {
            record += "\n" + physical;
        }
        in_quotes = quote_parity(physical, in_quotes);
        if (!in_quotes) {
            if (record.empty()) continue;  // skip blank lines
            records.push_back(parse_record(record, record_start));
        }
    }
    if (in_quotes) throw ParseError(record_start, "-", "unterminated quoted field at end of file");
    return records;
}

}  // namespace crowdscore::csv
