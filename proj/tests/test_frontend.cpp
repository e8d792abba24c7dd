#include "cfproto/frontend.hpp"
#include "doctest.h"

using namespace cfproto;

namespace {

std::string src(const std::string& rel) { return read_file(std::string(CFPROTO_SOURCE_DIR) + "/" + rel); }

bool calls(const ast::Stmt& s, const std::string& m) {
    if (s.kind == ast::Stmt::Call && s.name == m) return true;
    for (auto& b : s.body)
        if (calls(b, m)) return true;
    return false;
}

}  // namespace

TEST_CASE("running example parses with a recursive foo") {
    auto p = parse_program(src("corpus/lock/running-ok.cfp"));
    for (const char* m : {"foo", "acquire", "release"}) REQUIRE(p.method(m));
    CHECK(calls(p.method("foo")->body, "foo"));
    CHECK_FALSE(calls(p.method("acquire")->body, "acquire"));
    CHECK(p.method("acquire")->params.size() == 1);
    CHECK(p.method("acquire")->params[0].type == "Lock");
}

TEST_CASE("minimal program") {
    auto p = parse_program("class C { void main(){ skip; } }");
    REQUIRE(p.methods().size() == 1);
    CHECK(p.method("main")->body.kind == ast::Stmt::Skip);
}

TEST_CASE("resolution errors") {
    CHECK_THROWS_AS(parse_program("class C { void main(){ call bar(); } }"), ResolveError);
    try {
        parse_program("class C { void main(){ call bar(); } }");
    } catch (const ResolveError& e) {
        CHECK(e.ident == "bar");
    }
    CHECK_THROWS_AS(parse_program("class C { void f(){ skip; } }"), ResolveError);
    CHECK_THROWS_AS(parse_program("class C { void main(int x){ skip; } }"), ResolveError);
    CHECK_THROWS_AS(parse_program("class C { void main(){ x := y; } }"), ResolveError);
    CHECK_THROWS_AS(parse_program("class C { void main(){ api_call x.main(); x := 1; } }"), ResolveError);
    CHECK_THROWS_AS(parse_program("class C { void main(){ x := new D; } }"), ResolveError);
    CHECK_THROWS_AS(parse_program("class C { void main(){ x := 1; x.g := 2; } }"), ResolveError);
}

TEST_CASE("syntax errors carry positions") {
    try {
        parse_program("class C {\n  void main() {\n    x := ;\n  }\n}");
        FAIL("no error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.col == 10);
    }
    CHECK_THROWS_AS(parse_program("class C { void main() { skip } }"), ParseError);
    CHECK_THROWS_AS(parse_program("class C { void main() { x := 1 @ 2; } }"), ParseError);
}

TEST_CASE("expression and predicate syntax") {
    auto p = parse_program(
        "class C { static int g = *; int f;\n"
        " void main() { x := 1 + 2 * 3 - -4; y := (x + 1) * *; c := new C; c.f := x;\n"
        "  if ((x + 1) < y && !(y = 2) || x != c.f) { assume(x >= 0); } else if (*) { skip; } else { x := g; } } }");
    const auto& b = p.method("main")->body;
    REQUIRE(b.kind == ast::Stmt::Seq);
    CHECK(ast::to_string(b.body[0].e) == "1 + 2 * 3 - -4");
    CHECK(ast::to_string(b.body[1].e) == "(x + 1) * *");
    const auto& iff = b.body[4];
    REQUIRE(iff.kind == ast::Stmt::If);
    CHECK(iff.p.kind == ast::Pred::Or);
    CHECK(ast::to_string(iff.p) == "x + 1 < y && !(y == 2) || x != c.f");
    CHECK(iff.body[1].kind == ast::Stmt::If);
    CHECK(iff.body[1].p.is_star());
}

TEST_CASE("program round trip") {
    for (const char* f : {"corpus/lock/running-ok.cfp", "corpus/lock/running-bug.cfp"}) {
        auto p = parse_program(src(f));
        auto text = ast::to_source(p);
        auto q = parse_program(text);
        CHECK(p == q);
        CHECK(ast::to_source(q) == text);
    }
    auto p = parse_program(
        "class C { int f = 2; void main() { if (x < 1) { skip; } else { if (y > 2 || x = 3) { x := 0 - x; } } "
        "x := 3 * (0 - 2); y := x - (1 - 2); } }");
    CHECK(parse_program(ast::to_source(p)) == p);
}

TEST_CASE("lock protocol") {
    auto s = parse_spec(src("protocols/lock.spec"));
    CHECK(s.terminals.size() == 2);
    CHECK(s.terminals[0].str() == "$1.lock()");
    CHECK(s.terminals[1].str() == "$1.unlock()");
    CHECK(s.nonterminals.size() == 1);
    CHECK(s.prods.size() == 2);
    CHECK(wildcards(s) == std::set<std::string>{"$1"});
    CHECK(terminals_for_method(s, "lock").size() == 1);
    CHECK(terminals_for_method(s, "foo").empty());
    CHECK(lint_uniform_wildcards(s).empty());
    CHECK(s.wildcard_types.at("$1") == "Lock");
}

TEST_CASE("table protocols parse") {
    auto canvas = parse_spec(src("protocols/canvas.spec"));
    CHECK(canvas.prods.size() == 3);
    CHECK(canvas.terminals.size() == 2);
    auto json = parse_spec(src("protocols/json.spec"));
    CHECK(wildcards(json) == std::set<std::string>{"$1"});
    REQUIRE(terminals_for_method(json, "writeFieldName").size() == 1);
    CHECK(terminals_for_method(json, "writeFieldName")[0].str() == "$1.writeFieldName()");
    for (const char* f : {"relock", "wifi", "wake"}) {
        auto s = parse_spec(src(std::string("protocols/") + f + ".spec"));
        CHECK_FALSE(s.prods.empty());
    }
    auto wifi = parse_spec(src("protocols/wifi.spec"));
    REQUIRE(terminals_for_method(wifi, "setRefCnt").size() == 1);
    CHECK(terminals_for_method(wifi, "setRefCnt")[0].args == std::vector<std::string>{"false"});
}

TEST_CASE("terminals_for_method partitions the terminals") {
    auto s = parse_spec(src("protocols/json.spec"));
    std::size_t total = 0;
    std::set<std::string> methods;
    for (auto& t : s.terminals) methods.insert(t.method);
    for (auto& m : methods) total += terminals_for_method(s, m).size();
    CHECK(total == s.terminals.size());
}

TEST_CASE("protocol errors and lint") {
    CHECK_THROWS_AS(parse_spec("wildcards: $1: Lock; S -> $2.f() ;"), ResolveError);
    CHECK_THROWS_AS(parse_spec("wildcards: $1: Lock; S -> $1.f() T ;"), ResolveError);
    CHECK_THROWS_AS(parse_spec("wildcards: $1: Lock; start: X; S -> eps ;"), ResolveError);
    CHECK_THROWS_AS(parse_spec("wildcards: $1: Lock; S -> $1.f( ;"), ParseError);
    auto two = parse_spec("wildcards: $1: A, $2: B; S -> $1.f() $2.g() ;");
    CHECK(lint_uniform_wildcards(two).size() == 1);
    auto none = parse_spec("S -> eps ;");
    CHECK(wildcards(none).empty());
    CHECK(lint_uniform_wildcards(none).empty());
}

TEST_CASE("protocol round trip and grammar view") {
    for (const char* f : {"lock", "relock", "wifi", "wake", "canvas", "json"}) {
        auto s = parse_spec(src(std::string("protocols/") + f + ".spec"));
        CHECK(parse_spec(to_source(s)) == s);
        auto g = s.grammar();
        CHECK(g.prods.size() == s.prods.size());
        CHECK(g.name(g.start) == s.start);
    }
}
