#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sigver::toml {

/// Minimal TOML reader covering what run configs need: [tables], bare keys,
/// strings, integers, floats, booleans and (nested) arrays, with # comments.
/// Dotted keys, inline tables, dates and multiline strings are not supported.
class Value {
public:
    enum class Kind { string, integer, floating, boolean, array };

    explicit Value(std::string v) : kind_(Kind::string), str_(std::move(v)) {}
    explicit Value(std::int64_t v) : kind_(Kind::integer), int_(v) {}
    explicit Value(double v) : kind_(Kind::floating), float_(v) {}
    explicit Value(bool v) : kind_(Kind::boolean), bool_(v) {}
    explicit Value(std::vector<Value> v) : kind_(Kind::array), array_(std::move(v)) {}

    Kind kind() const { return kind_; }

    const std::string& as_string() const;
    std::int64_t as_int() const;
    double as_double() const; // integers widen
    bool as_bool() const;
    const std::vector<Value>& as_array() const;

private:
    Kind kind_;
    std::string str_;
    std::int64_t int_ = 0;
    double float_ = 0.0;
    bool bool_ = false;
    std::vector<Value> array_;
};

class Table {
public:
    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    /// Throws ParseError when the key is absent.
    const Value& get(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, Value value);

private:
    std::map<std::string, std::map<std::string, Value>> sections_;
};

/// Throws ParseError (with line number) on malformed input.
Table parse(const std::string& text);
Table parse_file(const std::string& path);

} // namespace sigver::toml
