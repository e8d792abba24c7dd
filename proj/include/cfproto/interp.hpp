#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfproto/ast.hpp"
#include "cfproto/frontend.hpp"
#include "cfproto/grammar.hpp"

namespace cfproto {

struct ConcreteState {
    std::map<std::string, std::int64_t> globals;
    std::map<std::string, std::int64_t> locals;  // current frame
    std::map<std::pair<std::int64_t, std::string>, std::int64_t> heap;
    std::int64_t alloc = 0;
};

struct ApiEvent {
    std::string method;
    std::int64_t recv = 0;
    std::vector<std::int64_t> args;
    ast::Loc loc;
    std::string symbolic;     // statement text, e.g. "$1.lock()"
    std::string str() const;  // "7.lock()"
};

struct ExecStep {
    std::string method;
    std::string text;
    ast::Loc loc;
    int depth = 0;
    std::optional<ConcreteState> state;  // after the step, when recorded
};

struct Execution {
    enum Status { Complete, Blocked, DepthExceeded, BudgetExhausted } status = Complete;
    std::vector<ExecStep> steps;
    std::vector<ApiEvent> events;
    std::set<std::int64_t> addresses;
    ConcreteState final_state;
};

enum class Choice { Branch, Value };

// picks one of the offered values; replay choosers may answer outside the list for Value
struct Chooser {
    virtual ~Chooser() = default;
    virtual std::int64_t choose(Choice kind, const std::vector<std::int64_t>& options) = 0;
};

struct InterpConfig {
    int max_depth = 6;    // call depth bound
    int budget = 2000;    // steps
    std::int64_t lo = -2, hi = 2;  // `*` range, plus existing addresses
    bool record_states = false;
};

Execution interpret(const ast::Program& p, Chooser& c, const InterpConfig& cfg = {});

// every chooser path; Blocked and DepthExceeded runs are dropped unless keep_partial
struct Enumerated {
    std::vector<Execution> runs;
    bool truncated = false;
};
Enumerated all_executions(const ast::Program& p, const InterpConfig& cfg = {}, std::size_t cap = 200000,
                          bool keep_partial = false);

// answers from a fixed list, in order: Branch as 1/0, Value as the number itself
struct ScriptChooser : Chooser {
    std::vector<std::int64_t> script;
    std::size_t pos = 0;
    bool exhausted = false;
    explicit ScriptChooser(std::vector<std::int64_t> s) : script(std::move(s)) {}
    std::int64_t choose(Choice kind, const std::vector<std::int64_t>& options) override;
};

// ---------------------------------------------------------------- conformance

// grammar with every wildcard replaced by its value; terminals named like ApiEvent::str
Grammar instantiate_spec(const SpecProtocol& spec, const std::map<std::string, std::int64_t>& values,
                         const std::map<std::int64_t, std::string>* value_types = nullptr);

// events whose concrete call is a terminal of ghat, in order
Word trace_to_word(const Execution& e, const Grammar& ghat);

struct ConformResult {
    bool pass = true;
    std::size_t executions = 0;
    Execution witness;
    std::map<std::string, std::int64_t> instantiation;
    std::string word;
    bool truncated = false;
};

ConformResult conforms(const ast::Program& p, const SpecProtocol& spec, const InterpConfig& cfg = {});

}  // namespace cfproto
