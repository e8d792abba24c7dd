#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfproto/ast.hpp"
#include "cfproto/grammar.hpp"

namespace cfproto {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(int l, int c, const std::string& msg)
        : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), col(c) {}
};

struct ResolveError : std::runtime_error {
    std::string ident;
    ResolveError(std::string id, const std::string& msg) : std::runtime_error(msg), ident(std::move(id)) {}
};

// recv.method(args); each slot is a wildcard `$k` or a literal (integer, true, false, null)
struct ApiCallPattern {
    std::string recv;
    std::string method;
    std::vector<std::string> args;
    bool operator==(const ApiCallPattern&) const = default;
    auto operator<=>(const ApiCallPattern&) const = default;
    std::string str() const;
};

bool is_wildcard(const std::string& s);
// literal slot value: true=1, false=0, null=0, integers as written
std::int64_t literal_value(const std::string& s);

struct SpecProduction {
    std::string lhs;
    std::vector<std::string> rhs;  // nonterminal names or terminal strings
    bool operator==(const SpecProduction&) const = default;
};

struct SpecProtocol {
    std::vector<ApiCallPattern> terminals;  // first-occurrence order
    std::vector<std::string> nonterminals;  // first-definition order
    std::vector<SpecProduction> prods;
    std::string start;
    std::map<std::string, std::string> wildcard_types;
    bool operator==(const SpecProtocol&) const = default;

    bool is_terminal(const std::string& sym) const;
    const ApiCallPattern* terminal(const std::string& sym) const;
    Grammar grammar() const;  // terminal names are ApiCallPattern::str()
};

ast::Program parse_program(const std::string& text);
SpecProtocol parse_spec(const std::string& text);
// structural checks only (used by parse_program and after transformations)
void check_program(const ast::Program& p);

std::string to_source(const SpecProtocol& s);

std::set<std::string> wildcards(const SpecProtocol& s);
std::vector<ApiCallPattern> terminals_for_method(const SpecProtocol& s, const std::string& m);
std::vector<std::string> lint_uniform_wildcards(const SpecProtocol& s);

std::string read_file(const std::string& path);

}  // namespace cfproto
