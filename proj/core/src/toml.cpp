#include "sigver/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "sigver/error.hpp"

namespace sigver::toml {

const std::string& Value::as_string() const {
    if (kind_ != Kind::string) raise(ErrorCode::ParseError, "TOML value is not a string");
    return str_;
}
std::int64_t Value::as_int() const {
    if (kind_ != Kind::integer) raise(ErrorCode::ParseError, "TOML value is not an integer");
    return int_;
}
double Value::as_double() const {
    if (kind_ == Kind::integer) return static_cast<double>(int_);
    if (kind_ != Kind::floating) raise(ErrorCode::ParseError, "TOML value is not a number");
    return float_;
}
bool Value::as_bool() const {
    if (kind_ != Kind::boolean) raise(ErrorCode::ParseError, "TOML value is not a boolean");
    return bool_;
}
const std::vector<Value>& Value::as_array() const {
    if (kind_ != Kind::array) raise(ErrorCode::ParseError, "TOML value is not an array");
    return array_;
}

bool Table::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

bool Table::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

const Value& Table::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s != sections_.end()) {
        auto k = s->second.find(key);
        if (k != s->second.end()) return k->second;
    }
    raise(ErrorCode::ParseError, "missing config key [" + section + "] " + key);
}

std::string Table::get_string(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
    return has(section, key) ? get(section, key).as_string() : fallback;
}
std::int64_t Table::get_int(const std::string& section, const std::string& key,
                            std::int64_t fallback) const {
    return has(section, key) ? get(section, key).as_int() : fallback;
}
double Table::get_double(const std::string& section, const std::string& key,
                         double fallback) const {
    return has(section, key) ? get(section, key).as_double() : fallback;
}
bool Table::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    return has(section, key) ? get(section, key).as_bool() : fallback;
}

void Table::set(const std::string& section, const std::string& key, Value value) {
    sections_[section].insert_or_assign(key, std::move(value));
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    std::size_t line = 1;

    [[noreturn]] void fail(const std::string& what) const {
        raise(ErrorCode::ParseError, "TOML line " + std::to_string(line) + ": " + what);
    }

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char next() {
        char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
    }

    // Whitespace, newlines and comments.
    void skip_ws_and_comments() {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') { ++pos; }
            else if (c == '\n') { next(); }
            else if (c == '#') {
                while (!eof() && peek() != '\n') ++pos;
            } else {
                break;
            }
        }
    }
};

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key(Cursor& cur) {
    std::string key;
    while (!cur.eof() && is_bare_key_char(cur.peek())) key.push_back(cur.next());
    if (key.empty()) cur.fail("expected a key");
    return key;
}

Value parse_value(Cursor& cur);

Value parse_array(Cursor& cur) {
    cur.next(); // '['
    std::vector<Value> items;
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ']') {
            cur.next();
            break;
        }
        items.push_back(parse_value(cur));
        cur.skip_ws_and_comments();
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ',') {
            cur.next();
        } else if (cur.peek() != ']') {
            cur.fail("expected ',' or ']' in array");
        }
    }
    return Value(std::move(items));
}

Value parse_string(Cursor& cur) {
    cur.next(); // '"'
    std::string out;
    while (true) {
        if (cur.eof()) cur.fail("unterminated string");
        char c = cur.next();
        if (c == '"') break;
        if (c == '\n') cur.fail("newline in string");
        if (c == '\\') {
            if (cur.eof()) cur.fail("unterminated escape");
            char e = cur.next();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: cur.fail("unsupported escape sequence");
            }
        } else {
            out.push_back(c);
        }
    }
    return Value(std::move(out));
}

Value parse_number_or_bool(Cursor& cur) {
    std::string tok;
    while (!cur.eof()) {
        char c = cur.peek();
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
            c == '_') {
            tok.push_back(cur.next());
        } else {
            break;
        }
    }
    if (tok == "true") return Value(true);
    if (tok == "false") return Value(false);
    if (tok.empty()) cur.fail("expected a value");

    std::string digits;
    for (char c : tok)
        if (c != '_') digits.push_back(c);

    bool looks_float = digits.find_first_of(".eE") != std::string::npos;
    if (!looks_float) {
        std::int64_t iv = 0;
        auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), iv);
        if (ec == std::errc() && p == digits.data() + digits.size()) return Value(iv);
    }
    double dv = 0.0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dv);
    if (ec == std::errc() && p == digits.data() + digits.size()) return Value(dv);
    cur.fail("malformed number '" + tok + "'");
}

Value parse_value(Cursor& cur) {
    char c = cur.peek();
    if (c == '[') return parse_array(cur);
    if (c == '"') return parse_string(cur);
    return parse_number_or_bool(cur);
}

} // namespace

Table parse(const std::string& text) {
    Table table;
    Cursor cur{text};
    std::string section; // keys before any [section] land in ""

    while (true) {
        cur.skip_ws_and_comments();
        if (cur.eof()) break;

        if (cur.peek() == '[') {
            cur.next();
            section.clear();
            while (!cur.eof() && cur.peek() != ']') {
                char c = cur.next();
                if (c == '\n') cur.fail("unterminated section header");
                section.push_back(c);
            }
            if (cur.eof()) cur.fail("unterminated section header");
            cur.next(); // ']'
            continue;
        }

        std::string key = parse_key(cur);
        cur.skip_inline_ws();
        if (cur.eof() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
        cur.next();
        cur.skip_inline_ws();
        if (cur.eof()) cur.fail("missing value for key '" + key + "'");
        table.set(section, key, parse_value(cur));

        cur.skip_inline_ws();
        if (!cur.eof() && cur.peek() == '#')
            while (!cur.eof() && cur.peek() != '\n') ++cur.pos;
        if (!cur.eof() && cur.peek() == '\r') ++cur.pos;
        if (!cur.eof() && cur.peek() != '\n') cur.fail("unexpected trailing characters");
    }
    return table;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::FileNotFound, path + ": cannot open");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(text);
}

} // namespace sigver::toml
