#pragma once

#include <optional>
#include <stdexcept>

#include "cfproto/ast.hpp"
#include "cfproto/frontend.hpp"

namespace cfproto {

struct InstrumentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// conjunction of `$i == v` over receiver and argument positions; literal slots give `v == c`
ast::Pred guard(const ApiCallPattern& t, const ast::Stmt& s);

// api_call on wildcard fields built from a terminal pattern
ast::Stmt pattern_call(const ApiCallPattern& t, ast::Loc loc = {});

// the terminal an (instrumented) api_call statement spells, if any
std::optional<ApiCallPattern> match_pattern(const SpecProtocol& spec, const ast::Stmt& s);

ast::Program instrument(const ast::Program& p, const SpecProtocol& spec);
ast::Program add_symbolic_constants(const ast::Program& p);

// both passes, as used by the verifier
ast::Program prepare(const ast::Program& p, const SpecProtocol& spec);

}  // namespace cfproto
