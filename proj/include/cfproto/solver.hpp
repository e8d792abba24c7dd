#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "cfproto/formula.hpp"

namespace cfproto {

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SatResult {
    enum Status { Sat, Unsat, Unknown } status = Unknown;
    std::map<std::string, std::int64_t> model;  // integer variables only
    std::string reason;
    bool sat() const { return status == Sat; }
    bool unsat() const { return status == Unsat; }
};

class Solver {
public:
    virtual ~Solver() = default;
    virtual SatResult check(const Expr& f) = 0;
    virtual std::string name() const = 0;

    // Unknown surfaces as SolverError
    bool is_sat(const Expr& f);
    bool is_valid(const Expr& f) { return !is_sat(mk_not(f)); }
    bool implies(const Expr& a, const Expr& b) { return !is_sat(mk_and(a, mk_not(b))); }
};

// Built-in decision procedure: array read-over-write elimination, Ackermann
// reduction of uninterpreted symbols, case splitting over the boolean structure,
// exact integer arithmetic for the literals.
class BuiltinSolver : public Solver {
public:
    SatResult check(const Expr& f) override;
    std::string name() const override { return "builtin"; }
};

// SMT-LIB over a pipe to an external process (e.g. "z3 -in").
class ExternalSolver : public Solver {
public:
    explicit ExternalSolver(std::string command, int timeout_ms = 10000);
    ~ExternalSolver() override;
    SatResult check(const Expr& f) override;
    std::string name() const override { return "external:" + command_; }

private:
    void start();
    void stop();
    void send(const std::string& s);
    std::string read_sexpr();

    std::string command_;
    int timeout_ms_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
    std::mutex mu_;
};

// Memoizing wrapper keyed by canonical formula text.
class CachedSolver : public Solver {
public:
    explicit CachedSolver(std::shared_ptr<Solver> inner) : inner_(std::move(inner)) {}
    SatResult check(const Expr& f) override;
    std::string name() const override { return inner_->name(); }
    std::uint64_t hits() const { return hits_; }
    std::uint64_t misses() const { return misses_; }
    void set_enabled(bool on) { enabled_ = on; }

private:
    std::shared_ptr<Solver> inner_;
    std::unordered_map<std::string, SatResult> cache_;
    std::mutex mu_;
    std::uint64_t hits_ = 0, misses_ = 0;
    bool enabled_ = true;
};

// "builtin" or "external:<command line>"
std::shared_ptr<Solver> make_solver(const std::string& spec);

}  // namespace cfproto
