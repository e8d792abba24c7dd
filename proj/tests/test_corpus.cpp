#include <chrono>

#include "cfproto/instrument.hpp"
#include "cfproto/solver.hpp"
#include "corpus.hpp"
#include "doctest.h"

using namespace cfproto;

TEST_CASE("corpus verdicts and per-iteration checks") {
    auto t0 = std::chrono::steady_clock::now();
    for (auto& c : corpus::load()) {
        CAPTURE(c.program);
        auto spec = corpus::protocol(c.protocol);
        auto prog = corpus::program(c);
        Config cfg;
        cfg.check_soundness = true;
        auto v = verify(prog, spec, cfg);
        std::string got = corpus::kind_name(v.kind);
        CAPTURE(got);
        CAPTURE(v.detail);
        CHECK((got == c.expect || (!c.allow.empty() && got == c.allow)));
        if (!c.word.empty()) CHECK(v.word == c.word);
        CHECK(v.progress_violations == 0);
        CHECK(v.soundness_violations == 0);
        CHECK(v.soundness_checks > 0);
        CHECK(v.interpolant_failures == 0);

        auto conf = conforms(prog, spec);
        if (v.kind == Verdict::Verified) CHECK(conf.pass);
        if (v.kind == Verdict::Violation) CHECK_FALSE(conf.pass);
        if (v.kind == Verdict::Unknown) {
            CHECK(v.reason == "bound-exhausted");
            auto s = make_solver("builtin");
            auto G = construct_cfg(v.final_pcfa, *s);
            CHECK_FALSE(refute_inclusion(G.g, compile_spec_to_dpda(spec), 12));
        }
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 300);
}

TEST_CASE("identical inputs give identical iteration logs") {
    for (auto& c : corpus::load()) {
        CAPTURE(c.program);
        auto spec = corpus::protocol(c.protocol);
        auto prog = corpus::program(c);
        auto a = verify(prog, spec), b = verify(prog, spec);
        REQUIRE(a.log.size() == b.log.size());
        for (size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].word == b.log[i].word);
            CHECK(a.log[i].pcfa_states == b.log[i].pcfa_states);
            CHECK(a.log[i].productions == b.log[i].productions);
            CHECK(a.log[i].psi_predicates == b.log[i].psi_predicates);
        }
        CHECK(a.kind == b.kind);
        CHECK(a.word == b.word);
    }
}
