#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace distill::toml {

/// Minimal TOML-subset reader covering what the experiment configs need:
/// [table] and [[array-of-tables]] headers, bare keys, strings with the usual
/// escapes, integers, floats, booleans, nested (possibly multiline) arrays,
/// and # comments. Duplicate keys and duplicate explicit table headers are
/// errors.

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
    std::variant<std::int64_t, double, bool, std::string, Array, Table> data;

    bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
    bool is_double() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
    bool is_table() const { return std::holds_alternative<Table>(data); }
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, int line)
        : std::runtime_error("toml parse error at line " + std::to_string(line) + ": " + msg) {}
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string text) : text_(std::move(text)) {}

    Table parse() {
        Table root;
        Table* current = &root;
        skip_filler();
        while (!eof()) {
            if (peek() == '[') {
                current = parse_header(root);
            } else {
                parse_pair(*current);
            }
            skip_filler();
        }
        return root;
    }

private:
    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    char take() {
        const char c = text_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

    // Whitespace, newlines, and comments between statements.
    void skip_filler() {
        while (!eof()) {
            const char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') take();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                take();
            } else {
                break;
            }
        }
    }

    // Spaces and tabs only (stay on the current line).
    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) take();
    }

    void expect_line_end(const std::string& what) {
        skip_inline_ws();
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') take();
        }
        if (!eof() && peek() != '\n') fail("unexpected text after " + what);
    }

    static bool is_key_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }

    std::string parse_key() {
        std::string key;
        while (!eof() && is_key_char(peek())) key.push_back(take());
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> parse_header_path() {
        std::vector<std::string> path;
        while (true) {
            skip_inline_ws();
            path.push_back(parse_key());
            skip_inline_ws();
            if (!eof() && peek() == '.') {
                take();
                continue;
            }
            break;
        }
        return path;
    }

    // Walks (creating as needed) to the table for all but the last path
    // element; array-of-tables segments resolve to their last element.
    Table* walk_to(Table& root, const std::vector<std::string>& path, std::size_t n) {
        Table* t = &root;
        for (std::size_t i = 0; i < n; ++i) {
            auto it = t->find(path[i]);
            if (it == t->end()) {
                it = t->emplace(path[i], Value{Table{}}).first;
            }
            Value& v = it->second;
            if (v.is_table()) {
                t = &std::get<Table>(v.data);
            } else if (v.is_array()) {
                Array& arr = std::get<Array>(v.data);
                if (arr.empty() || !arr.back().is_table()) {
                    fail("key '" + path[i] + "' is not a table");
                }
                t = &std::get<Table>(arr.back().data);
            } else {
                fail("key '" + path[i] + "' is not a table");
            }
        }
        return t;
    }

    Table* parse_header(Table& root) {
        take();  // '['
        const bool is_array = !eof() && peek() == '[';
        if (is_array) take();
        const std::vector<std::string> path = parse_header_path();
        if (eof() || take() != ']') fail("expected ']' in table header");
        if (is_array && (eof() || take() != ']')) fail("expected ']]' in array-of-tables header");
        expect_line_end("table header");

        Table* parent = walk_to(root, path, path.size() - 1);
        const std::string& leaf = path.back();
        auto it = parent->find(leaf);
        if (is_array) {
            if (it == parent->end()) {
                it = parent->emplace(leaf, Value{Array{}}).first;
            }
            if (!it->second.is_array()) fail("key '" + leaf + "' is not an array of tables");
            Array& arr = std::get<Array>(it->second.data);
            arr.push_back(Value{Table{}});
            return &std::get<Table>(arr.back().data);
        }
        if (it == parent->end()) {
            it = parent->emplace(leaf, Value{Table{}}).first;
        }
        if (!it->second.is_table()) fail("key '" + leaf + "' already holds a value");
        Table* t = &std::get<Table>(it->second.data);
        // A table may be created implicitly by a deeper header, but only one
        // explicit [header] may name it.
        if (!defined_tables_.insert(t).second) fail("table '" + leaf + "' defined twice");
        return t;
    }

    void parse_pair(Table& table) {
        const std::string key = parse_key();
        skip_inline_ws();
        if (eof() || take() != '=') fail("expected '=' after key '" + key + "'");
        skip_inline_ws();
        Value v = parse_value();
        expect_line_end("value for key '" + key + "'");
        if (!table.emplace(key, std::move(v)).second) {
            fail("duplicate key '" + key + "'");
        }
    }

    Value parse_value() {
        if (eof()) fail("expected a value");
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        return parse_scalar();
    }

    Value parse_string() {
        take();  // opening quote
        std::string out;
        while (true) {
            if (eof()) fail("unterminated string");
            char c = take();
            if (c == '"') break;
            if (c == '\n') fail("newline inside string");
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                const char e = take();
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: fail(std::string("unsupported escape '\\") + e + "'");
                }
            } else {
                out.push_back(c);
            }
        }
        return Value{out};
    }

    Value parse_array() {
        take();  // '['
        Array arr;
        while (true) {
            skip_filler();  // newlines and comments are fine inside arrays
            if (eof()) fail("unterminated array");
            if (peek() == ']') {
                take();
                break;
            }
            arr.push_back(parse_value());
            skip_filler();
            if (eof()) fail("unterminated array");
            if (peek() == ',') {
                take();
            } else if (peek() != ']') {
                fail("expected ',' or ']' in array");
            }
        }
        return Value{arr};
    }

    Value parse_scalar() {
        std::string token;
        while (!eof()) {
            const char c = peek();
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ']' || c == '#') break;
            token.push_back(take());
        }
        if (token.empty()) fail("expected a value");
        if (token == "true") return Value{true};
        if (token == "false") return Value{false};

        const bool looks_float = token.find_first_of(".eE") != std::string::npos;
        errno = 0;
        char* end = nullptr;
        if (!looks_float) {
            const long long i = std::strtoll(token.c_str(), &end, 10);
            if (errno == 0 && end == token.c_str() + token.size()) {
                return Value{static_cast<std::int64_t>(i)};
            }
        }
        errno = 0;
        const double d = std::strtod(token.c_str(), &end);
        if (errno != 0 || end != token.c_str() + token.size()) {
            fail("cannot parse value '" + token + "'");
        }
        return Value{d};
    }

    std::string text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::set<const Table*> defined_tables_{};
};

}  // namespace detail

inline Table parse(const std::string& text) { return detail::Parser(text).parse(); }

inline Table parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

// ---- typed accessors -------------------------------------------------------

inline const Value* find(const Table& t, const std::string& key) {
    const auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

[[noreturn]] inline void missing(const std::string& key) {
    throw std::runtime_error("config: missing required key '" + key + "'");
}

[[noreturn]] inline void bad_type(const std::string& key, const std::string& want) {
    throw std::runtime_error("config: key '" + key + "' must be " + want);
}

inline double as_double(const Value& v, const std::string& key) {
    if (v.is_double()) return std::get<double>(v.data);
    if (v.is_int()) return static_cast<double>(std::get<std::int64_t>(v.data));
    bad_type(key, "a number");
}

inline std::int64_t req_int(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    if (!v->is_int()) bad_type(key, "an integer");
    return std::get<std::int64_t>(v->data);
}

inline double req_double(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    return as_double(*v, key);
}

inline bool req_bool(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    if (!v->is_bool()) bad_type(key, "a boolean");
    return std::get<bool>(v->data);
}

inline std::string req_string(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    if (!v->is_string()) bad_type(key, "a string");
    return std::get<std::string>(v->data);
}

inline std::int64_t get_int(const Table& t, const std::string& key, std::int64_t fallback) {
    return find(t, key) ? req_int(t, key) : fallback;
}

inline double get_double(const Table& t, const std::string& key, double fallback) {
    return find(t, key) ? req_double(t, key) : fallback;
}

inline bool get_bool(const Table& t, const std::string& key, bool fallback) {
    return find(t, key) ? req_bool(t, key) : fallback;
}

inline std::string get_string(const Table& t, const std::string& key, const std::string& fallback) {
    return find(t, key) ? req_string(t, key) : fallback;
}

inline std::vector<double> req_double_array(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    if (!v->is_array()) bad_type(key, "an array of numbers");
    std::vector<double> out;
    for (const Value& e : std::get<Array>(v->data)) out.push_back(as_double(e, key));
    return out;
}

inline std::vector<std::vector<double>> req_double_matrix(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) missing(key);
    if (!v->is_array()) bad_type(key, "an array of arrays of numbers");
    std::vector<std::vector<double>> out;
    for (const Value& row : std::get<Array>(v->data)) {
        if (!row.is_array()) bad_type(key, "an array of arrays of numbers");
        std::vector<double> r;
        for (const Value& e : std::get<Array>(row.data)) r.push_back(as_double(e, key));
        out.push_back(std::move(r));
    }
    return out;
}

inline const Table* find_table(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) return nullptr;
    if (!v->is_table()) bad_type(key, "a table");
    return &std::get<Table>(v->data);
}

inline const Array* find_table_array(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) return nullptr;
    if (!v->is_array()) bad_type(key, "an array of tables");
    return &std::get<Array>(v->data);
}

}  // namespace distill::toml
