#include "cfproto/instrument.hpp"
#include "doctest.h"

using namespace cfproto;
using namespace cfproto::ast;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

Stmt api(const std::string& recv, const std::string& m, std::vector<Exp> args = {}) {
    Stmt s;
    s.kind = Stmt::ApiCall;
    s.var = recv;
    s.name = m;
    s.args = std::move(args);
    return s;
}

int count_kind(const Stmt& s, Stmt::Kind k) {
    int n = s.kind == k;
    for (auto& b : s.body) n += count_kind(b, k);
    return n;
}

}  // namespace

TEST_CASE("guards") {
    ApiCallPattern lock{"$1", "lock", {}};
    CHECK(to_string(guard(lock, api("x", "lock"))) == "$1 == x");
    ApiCallPattern two{"$1", "put", {"$2"}};
    CHECK(to_string(guard(two, api("a", "put", {Exp::var("b")}))) == "$1 == a && $2 == b");
    ApiCallPattern lit{"$1", "setRefCnt", {"false"}};
    CHECK(to_string(guard(lit, api("w", "setRefCnt", {Exp::var("f")}))) == "$1 == w && f == 0");
    CHECK_THROWS_AS(guard(two, api("a", "put")), InstrumentError);
}

TEST_CASE("running example acquire is rewritten into a guarded call") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto p = instrument(parse_program(src("corpus/lock/running-ok.cfp")), spec);
    auto statics = p.statics();
    REQUIRE(statics.size() == 1);
    CHECK(statics[0]->name == "$1");
    CHECK(statics[0]->type == "Lock");
    CHECK(statics[0]->init.kind == Exp::Star);
    const auto& b = p.method("acquire")->body;
    REQUIRE(b.kind == Stmt::If);
    CHECK(to_string(b.p) == "$1 == l1");
    CHECK(b.body[0].kind == Stmt::ApiCall);
    CHECK(b.body[0].var == "$1");
    CHECK(b.body[1].kind == Stmt::Skip);
    CHECK(match_pattern(spec, b.body[0])->str() == "$1.lock()");
    CHECK(parse_program(to_source(p)) == p);
}

TEST_CASE("api-free program only gains wildcard statics") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto p = parse_program("class C { static int g = 1; void main() { x := g; call f(x); } void f(int y) { skip; } }");
    auto q = instrument(p, spec);
    CHECK(q.statics().size() == 2);
    auto& fs = q.classes[0].fields;
    fs.erase(fs.begin());
    CHECK(q == p);
}

TEST_CASE("call with no terminal for its method becomes skip") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto q = instrument(parse_program("class C { void main() { l := 1; api_call l.close(); } }"), spec);
    const auto& b = q.method("main")->body;
    REQUIRE(b.kind == Stmt::Seq);
    CHECK(b.body[1].kind == Stmt::Skip);
    CHECK(count_kind(b, Stmt::ApiCall) == 0);
}

TEST_CASE("several terminals give an else-if chain") {
    auto spec = parse_spec("wildcards: $1: A; S -> $1.f(1) S | $1.f(2) | eps ;");
    auto q = instrument(parse_program("class C { void main() { a := 1; api_call a.f(a); } }"), spec);
    const auto& c = q.method("main")->body.body[1];
    REQUIRE(c.kind == Stmt::If);
    CHECK(to_string(c.p) == "$1 == a && a == 1");
    REQUIRE(c.body[1].kind == Stmt::If);
    CHECK(to_string(c.body[1].p) == "$1 == a && a == 2");
    CHECK(c.body[1].body[1].kind == Stmt::Skip);
}

TEST_CASE("symbolic constants") {
    auto spec = parse_spec(src("protocols/lock.spec"));
    auto p = prepare(parse_program(src("corpus/lock/running-ok.cfp")), spec);
    const auto* acq = p.method("acquire");
    REQUIRE(acq->ghosts.size() == 1);
    CHECK(acq->ghosts[0] == std::pair<std::string, std::string>{"l1_acq", "l1"});
    REQUIRE(acq->body.kind == Stmt::Seq);
    CHECK(head_string(acq->body.body[0]) == "l1_acq := l1");
    CHECK(p.method("foo")->ghosts[0].first == "l_foo");
    CHECK(p.method("main")->ghosts.empty());
    CHECK(p.method("main")->body == instrument(parse_program(src("corpus/lock/running-ok.cfp")), spec).method("main")->body);
    auto clash = add_symbolic_constants(parse_program("class C { void main() { call foo(1); } void foo(int x) { x_foo := x; } }"));
    CHECK(clash.method("foo")->ghosts[0].first == "x_foo_2");
}
