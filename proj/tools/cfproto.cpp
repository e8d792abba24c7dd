#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfproto/driver.hpp"
#include "cfproto/instrument.hpp"

using namespace cfproto;

namespace {

std::set<std::string> split_list(const std::string& s) {
    std::set<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.insert(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"context-free API protocol verifier"};
    app.require_subcommand(1);

    std::string prog_path, spec_path, dpda_path, solver = "builtin", emit, inclusion = "s1+s2";
    int max_iters = 50, bound = 8, depth = 6;
    std::uint64_t seed = 0;
    bool compact_grammar = false, soundness = false;

    auto* ver = app.add_subcommand("verify", "run the refinement loop on a program against a protocol");
    ver->add_option("program", prog_path, "client program (.cfp)")->required()->check(CLI::ExistingFile);
    ver->add_option("protocol", spec_path, "protocol grammar (.spec)")->required()->check(CLI::ExistingFile);
    ver->add_option("--dpda", dpda_path, "recognizer for the protocol (.dpda)")->check(CLI::ExistingFile);
    ver->add_option("--max-iters", max_iters, "refinement iterations before giving up")->capture_default_str();
    ver->add_option("--bound", bound, "word length for counterexample search")->capture_default_str();
    ver->add_option("--solver", solver, "builtin | external:<command>")->capture_default_str();
    ver->add_flag("--compact-grammar", compact_grammar, "contract unit statement chains");
    ver->add_option("--emit", emit, "comma list of pcfa, grammar, trace, psi, instrumented");
    ver->add_option("--seed", seed, "seed for randomized oracles")->capture_default_str();
    ver->add_option("--inclusion", inclusion, "s1+s2 | s2-only")
        ->check(CLI::IsMember({"s1+s2", "s2-only"}))
        ->capture_default_str();
    ver->add_flag("--check-soundness", soundness, "check every bounded execution against each abstraction");

    auto* con = app.add_subcommand("conform", "bounded enumeration of executions against a protocol");
    con->add_option("program", prog_path)->required()->check(CLI::ExistingFile);
    con->add_option("protocol", spec_path)->required()->check(CLI::ExistingFile);
    con->add_option("--depth", depth, "call depth bound")->capture_default_str();

    auto* dp = app.add_subcommand("dpda", "print the recognizer compiled from a protocol");
    dp->add_option("protocol", spec_path)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        auto spec = parse_spec(read_file(spec_path));
        if (dp->parsed()) {
            std::cout << compile_spec_to_dpda(spec).to_text();
            return 0;
        }
        std::string source = read_file(prog_path);
        auto prog = parse_program(source);
        if (con->parsed()) {
            InterpConfig ic;
            ic.max_depth = depth;
            auto r = conforms(prog, spec, ic);
            std::cout << "result: " << (r.pass ? "Pass" : "Fail") << "\n";
            std::cout << "executions: " << r.executions << (r.truncated ? " (truncated)" : "") << "\n";
            if (!r.pass) {
                std::cout << "word: \"" << r.word << "\"\n";
                for (auto& [w, val] : r.instantiation) std::cout << "instantiation: " << w << " = " << val << "\n";
            }
            return r.pass ? 0 : 1;
        }
        Config cfg;
        cfg.max_iters = max_iters;
        cfg.bound = bound;
        cfg.solver = solver;
        cfg.compact_grammar = compact_grammar;
        cfg.emit = split_list(emit);
        for (auto& e : cfg.emit)
            if (e != "pcfa" && e != "grammar" && e != "trace" && e != "psi" && e != "instrumented")
                throw std::invalid_argument("unknown --emit item: " + e);
        cfg.emit_out = &std::cout;
        cfg.seed = seed;
        cfg.prove = inclusion == "s1+s2";
        cfg.check_soundness = soundness;
        cfg.source = source;
        if (!dpda_path.empty()) cfg.dpda = parse_dpda(read_file(dpda_path), &spec);
        auto v = verify(prog, spec, cfg);
        std::cout << render_report(v, cfg.emit);
        return exit_code(v);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
