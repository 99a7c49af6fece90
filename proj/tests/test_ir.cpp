#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ipa/ir.hpp"

using namespace ipa;

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program parseFixture(const std::string& name) {
  return parseProgram(readFile(std::string(IPA_FIXTURE_DIR) + "/" + name));
}

std::vector<std::string> bodyLabels(const Method& m) {
  std::vector<std::string> out;
  for (const CfgNode& n : m.nodes) out.push_back(n.label);
  return out;
}

}  // namespace

TEST_CASE("mutrec parses into desugared CFGs") {
  Program p = parseFixture("mutrec.ir");
  REQUIRE(p.methods.size() == 3);
  REQUIRE(p.entry == *p.findMethod(MethodRef{std::nullopt, "main"}));

  const Method& main = p.entryMethod();
  CHECK(bodyLabels(main) ==
        std::vector<std::string>{"entry", "n1", "c1$0", "c1", "c4$0", "c4", "exit"});
  CHECK(main.nodes.size() == 7);  // 5 body nodes + synthetic entry/exit

  // literal argument -3 became a temp definition feeding the call
  const auto& c1 = std::get<StaticCall>(main.nodes[main.indexOfLabel("c1")].stmt);
  CHECK(c1.args == std::vector<std::string>{"p", "$c1_0"});
  const auto& t1 = std::get<ConstAssign>(main.nodes[main.indexOfLabel("c1$0")].stmt);
  CHECK(t1.lhs == "$c1_0");
  CHECK(t1.value == -3);

  // negated-variable argument became a Neg temp
  const auto& t4 = std::get<Neg>(main.nodes[main.indexOfLabel("c4$0")].stmt);
  CHECK(t4.lhs == "$c4_0");
  CHECK(t4.rhs == "q");

  const Method& f = p.methods[*p.findMethod(MethodRef{std::nullopt, "f"})];
  CHECK(f.params == std::vector<std::string>{"a", "b"});
  // branch successors: fall-through first, then the target
  const CfgNode& n2 = f.nodes[f.indexOfLabel("n2")];
  CHECK(n2.succ == std::vector<int>{f.indexOfLabel("c2$0"), f.indexOfLabel("n3")});
  // return jumps to the synthetic exit
  CHECK(f.nodes[f.indexOfLabel("n5")].succ == std::vector<int>{f.exit});
  // goto
  CHECK(f.nodes[f.indexOfLabel("n4")].succ == std::vector<int>{f.indexOfLabel("n5")});

  // locals: assigned variables incl. temps and $ret, params excluded
  CHECK(f.locals == std::vector<std::string>{"$c2_0", "$ret", "c"});
}

TEST_CASE("reverse postorder follows fall-through before branch targets") {
  Program p = parseFixture("mutrec.ir");
  const Method& f = p.methods[*p.findMethod(MethodRef{std::nullopt, "f"})];

  std::vector<std::string> full = reversePostorder(f);
  CHECK(full == std::vector<std::string>{"entry", "n2", "n3", "c2$0", "c2", "n4", "n5", "exit"});

  // with parser temps dropped, the order over source labels:
  std::vector<std::string> source;
  for (const std::string& l : full) {
    if (l.find('$') == std::string::npos) source.push_back(l);
  }
  CHECK(source == std::vector<std::string>{"entry", "n2", "n3", "c2", "n4", "n5", "exit"});

  // every reachable node exactly once; entry first, exit last
  CHECK(full.front() == "entry");
  CHECK(full.back() == "exit");
  std::set<std::string> uniq(full.begin(), full.end());
  CHECK(uniq.size() == full.size());
  CHECK(full.size() == f.nodes.size());

  // ranks agree with the order
  for (size_t i = 0; i + 1 < full.size(); ++i) {
    CHECK(f.orderFwd[f.indexOfLabel(full[i])] < f.orderFwd[f.indexOfLabel(full[i + 1])]);
  }
}

TEST_CASE("printProgram round-trips") {
  for (const char* name : {"mutrec.ir", "twoclass.ir", "poly.ir"}) {
    CAPTURE(name);
    Program p = parseFixture(name);
    std::string once = printProgram(p);
    Program q = parseProgram(once);
    CHECK(printProgram(q) == once);
  }
}

TEST_CASE("parse errors") {
  SUBCASE("reserved labels") {
    CHECK_THROWS_AS(parseProgram("method m() { entry: nop }\nentry m\n"), ParseError);
    CHECK_THROWS_AS(parseProgram("method m() { exit: nop }\nentry m\n"), ParseError);
  }
  SUBCASE("duplicate label") {
    CHECK_THROWS_AS(parseProgram("method m() { l: nop l: nop }\nentry m\n"), ParseError);
  }
  SUBCASE("undefined branch target") {
    CHECK_THROWS_AS(parseProgram("method m() { l: goto nowhere }\nentry m\n"), ParseError);
  }
  SUBCASE("duplicate method") {
    CHECK_THROWS_AS(parseProgram("method m() { l: nop }\nmethod m() { l: nop }\nentry m\n"),
                    ParseError);
  }
  SUBCASE("missing entry") {
    CHECK_THROWS_AS(parseProgram("method m() { l: nop }\n"), ParseError);
  }
  SUBCASE("entry method must take no parameters") {
    CHECK_THROWS_AS(parseProgram("method m(x) { l: nop }\nentry m\n"), ParseError);
  }
  SUBCASE("entry method must exist") {
    CHECK_THROWS_AS(parseProgram("method m() { l: nop }\nentry other\n"), ParseError);
  }
  SUBCASE("undeclared superclass") {
    CHECK_THROWS_AS(parseProgram("class A extends B { }\nmethod m() { l: nop }\nentry m\n"),
                    ParseError);
  }
  SUBCASE("hierarchy cycle") {
    CHECK_THROWS_AS(
        parseProgram("class A extends B { }\nclass B extends A { }\nmethod m() { l: nop }\nentry m\n"),
        ParseError);
  }
  SUBCASE("positions are reported") {
    try {
      parseProgram("method m() {\n  l: x = &\n}\nentry m\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line == 2);
    }
  }
}

TEST_CASE("statement def/use helpers") {
  Statement ret = Return{"v"};
  CHECK(definedVar(ret) == kRetVar);
  CHECK(usedVars(ret) == std::vector<std::string>{"v"});

  Statement bin = BinOp{"x", "a", '*', "b"};
  CHECK(definedVar(bin) == "x");
  CHECK(usedVars(bin) == std::vector<std::string>{"a", "b"});

  Statement vc = VirtualCall{"y", "r", "m", {"p", "q"}};
  CHECK(isCall(vc));
  CHECK(definedVar(vc) == "y");
  CHECK(usedVars(vc) == std::vector<std::string>{"r", "p", "q"});

  Statement st = StoreField{"o", "f", "v"};
  CHECK(definedVar(st) == "");
  CHECK(usedVars(st) == std::vector<std::string>{"o", "v"});

  CHECK(isHiddenVar("$ret"));
  CHECK(isHiddenVar("$c1_0"));
  CHECK(!isHiddenVar("retval"));
}

TEST_CASE("dispatch and subtypes over the two-class hierarchy") {
  Program p = parseFixture("twoclass.ir");
  int am = lookupDispatch(p, "A", "m");
  int bm = lookupDispatch(p, "B", "m");
  CHECK(am != bm);
  CHECK(p.methods[am].owner == "A");
  CHECK(p.methods[bm].owner == "B");
  CHECK_THROWS_AS(lookupDispatch(p, "A", "missing"), std::out_of_range);
  CHECK_THROWS_AS(lookupDispatch(p, "Nope", "m"), std::out_of_range);

  CHECK(subtypes(p, "A") == std::set<std::string>{"A", "B"});
  CHECK(subtypes(p, "B") == std::set<std::string>{"B"});

  // inherited dispatch: a subclass without its own declaration finds the base one
  Program q = parseProgram(
      "class C { method m(s) { l: return s } }\n"
      "class D extends C { }\n"
      "method main() { l: x = new D }\n"
      "entry main\n");
  CHECK(lookupDispatch(q, "D", "m") == lookupDispatch(q, "C", "m"));

  // allocation sites registry
  CHECK(p.siteClass(p.entry, "t1") == "B");
  CHECK(p.siteClass(p.entry, "t2") == std::nullopt);
}

TEST_CASE("validate flags semantic problems") {
  SUBCASE("clean program") {
    Program p = parseFixture("mutrec.ir");
    CHECK(validate(p).empty());
  }
  SUBCASE("unreachable node") {
    Program p = parseProgram("method m() { a: goto c\n b: nop\n c: nop }\nentry m\n");
    auto diags = validate(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Warning);
    CHECK(diags[0].message.find("unreachable") != std::string::npos);
    CHECK(diags[0].message.find("'b'") != std::string::npos);
  }
  SUBCASE("undefined variable") {
    Program p = parseProgram("method m() { a: x = y }\nentry m\n");
    auto diags = validate(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Error);
    CHECK(diags[0].message.find("'y'") != std::string::npos);
  }
  SUBCASE("virtual call on never-assigned receiver is one error") {
    Program p = parseProgram(
        "class A { method m(s) { l: return s } }\n"
        "method main() { a: x = vcall r.m(r) }\n"
        "entry main\n");
    auto diags = validate(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Error);
    CHECK(diags[0].message.find("'r'") != std::string::npos);
  }
  SUBCASE("call to undeclared method is a warning naming a default site") {
    Program p = parseProgram("method main() { a: x = call lib(x) }\nentry main\n");
    auto diags = validate(p);
    bool sawDefault = false;
    for (const auto& d : diags) {
      if (d.message.find("default site") != std::string::npos) {
        CHECK(d.severity == Diagnostic::Severity::Warning);
        sawDefault = true;
      }
    }
    CHECK(sawDefault);
  }
  SUBCASE("static call arity mismatch") {
    Program p = parseProgram(
        "method f(a, b) { l: return a }\n"
        "method main() { a: x = call f(1) }\nentry main\n");
    auto diags = validate(p);
    bool sawArity = false;
    for (const auto& d : diags) {
      if (d.severity == Diagnostic::Severity::Error &&
          d.message.find("argument") != std::string::npos) {
        sawArity = true;
      }
    }
    CHECK(sawArity);
  }
  SUBCASE("unknown class in new") {
    Program p = parseProgram("method main() { a: x = new Ghost }\nentry main\n");
    auto diags = validate(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Error);
    CHECK(diags[0].message.find("Ghost") != std::string::npos);
  }
  SUBCASE("static field on wrong class") {
    Program p = parseProgram(
        "class A { static field g }\nclass B { }\n"
        "method main() { a: x = static B.g\n b: static A.g = x }\nentry main\n");
    auto diags = validate(p);
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].severity == Diagnostic::Severity::Warning);
    CHECK(diags[0].message.find("'g'") != std::string::npos);
  }
}

TEST_CASE("single-node and empty methods get synthetic structure") {
  Program p = parseProgram("method m() { only: nop }\nentry m\n");
  const Method& m = p.entryMethod();
  CHECK(m.nodes.size() == 3);
  CHECK(m.nodes[m.entry].succ == std::vector<int>{1});
  CHECK(m.nodes[1].succ == std::vector<int>{m.exit});
  CHECK(m.nodes[m.exit].succ.empty());

  Program q = parseProgram("method e() { }\nentry e\n");
  const Method& e = q.entryMethod();
  CHECK(e.nodes.size() == 2);
  CHECK(e.nodes[e.entry].succ == std::vector<int>{e.exit});
}
