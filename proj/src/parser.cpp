#include <cctype>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ipa/ir.hpp"

// Recursive-descent parser for the textual IR. Tokenization is
// newline-insensitive; statement boundaries follow from the grammar (every
// statement starts with LABEL ':'). '#' starts a comment running to the end of
// the line.

namespace ipa {
namespace {

enum class Tok { Name, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;      // Name/Punct text
  long long value = 0;   // Int value
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { next(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    next();
    return t;
  }

 private:
  void next() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++pos_, ++line_, col_ = 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_, ++col_;
      } else {
        break;
      }
    }
    tok_ = Token{Tok::End, "", 0, line_, col_};
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_' || src_[pos_] == '$')) {
        ++pos_, ++col_;
      }
      tok_.kind = Tok::Name;
      tok_.text = src_.substr(start, pos_ - start);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_, ++col_;
      }
      tok_.kind = Tok::Int;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.value = std::stoll(tok_.text);
    } else if (std::string("{}(),:.=+-*").find(c) != std::string::npos) {
      tok_.kind = Tok::Punct;
      tok_.text = std::string(1, c);
      ++pos_, ++col_;
    } else {
      throw ParseError(line_, col_, std::string("unexpected character '") + c + "'");
    }
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

// Argument expression before desugaring: a variable, a literal, or a negated
// variable. Literals and negations become fresh temp nodes ahead of the call.
struct ArgExpr {
  enum class Kind { Var, Lit, NegVar } kind = Kind::Var;
  std::string name;
  long long value = 0;
};

struct RawLine {
  std::string label;
  Statement stmt;              // call args filled after desugaring
  std::vector<ArgExpr> args;   // raw call arguments (calls only)
  int line = 0, col = 0;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program run() {
    bool entrySeen = false;
    MethodRef entryRef;
    int entryLine = 1, entryCol = 1;
    while (lex_.peek().kind != Tok::End) {
      const Token& t = lex_.peek();
      if (t.kind != Tok::Name) fail(t, "expected declaration");
      if (t.text == "class") {
        parseClass();
      } else if (t.text == "method") {
        parseMethod(std::nullopt);
      } else if (t.text == "entry") {
        Token kw = lex_.take();
        if (entrySeen) fail(kw, "duplicate entry declaration");
        entrySeen = true;
        entryLine = kw.line, entryCol = kw.col;
        entryRef = parseMethodRef();
      } else {
        fail(t, "expected 'class', 'method', or 'entry'");
      }
    }
    if (!entrySeen) throw ParseError(1, 1, "missing entry declaration");
    resolveHierarchy();
    auto it = prog_.methodIndex.find(entryRef.str());
    if (it == prog_.methodIndex.end())
      throw ParseError(entryLine, entryCol, "entry method '" + entryRef.str() + "' is not declared");
    prog_.entry = it->second;
    if (!prog_.methods[prog_.entry].params.empty())
      throw ParseError(entryLine, entryCol, "entry method must have zero parameters");
    for (int i = 0; i < static_cast<int>(prog_.methods.size()); ++i) finalizeMethod(i);
    return std::move(prog_);
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw ParseError(t.line, t.col, msg);
  }

  Token expectName(const std::string& what) {
    Token t = lex_.take();
    if (t.kind != Tok::Name) fail(t, "expected " + what);
    return t;
  }

  Token expectPunct(const std::string& p) {
    Token t = lex_.take();
    if (t.kind != Tok::Punct || t.text != p) fail(t, "expected '" + p + "'");
    return t;
  }

  bool atPunct(const std::string& p) const {
    return lex_.peek().kind == Tok::Punct && lex_.peek().text == p;
  }

  bool atName(const std::string& n) const {
    return lex_.peek().kind == Tok::Name && lex_.peek().text == n;
  }

  MethodRef parseMethodRef() {
    Token first = expectName("method name");
    if (atPunct(".")) {
      lex_.take();
      Token second = expectName("method name");
      return MethodRef{first.text, second.text};
    }
    return MethodRef{std::nullopt, first.text};
  }

  void parseClass() {
    lex_.take();  // class
    Token name = expectName("class name");
    ClassDef cls;
    cls.name = name.text;
    if (prog_.classIndex.count(cls.name)) fail(name, "duplicate class '" + cls.name + "'");
    if (atName("extends")) {
      lex_.take();
      Token sup = expectName("superclass name");
      cls.super = sup.text;
      superDeclSites_.push_back({cls.name, sup.line, sup.col});
    }
    expectPunct("{");
    int classIdx = static_cast<int>(prog_.classes.size());
    prog_.classes.push_back(cls);
    prog_.classIndex[cls.name] = classIdx;
    while (!atPunct("}")) {
      const Token& t = lex_.peek();
      if (t.kind != Tok::Name) fail(t, "expected class member");
      if (t.text == "field") {
        lex_.take();
        Token f = expectName("field name");
        prog_.classes[classIdx].fields.push_back(f.text);
      } else if (t.text == "static") {
        lex_.take();
        Token fkw = lex_.take();
        if (fkw.kind != Tok::Name || fkw.text != "field") fail(fkw, "expected 'field'");
        Token f = expectName("static field name");
        prog_.classes[classIdx].staticFields.push_back(f.text);
      } else if (t.text == "method") {
        int methodIdx = parseMethod(prog_.classes[classIdx].name);
        prog_.classes[classIdx].methods.push_back(methodIdx);
      } else {
        fail(t, "expected 'field', 'static field', or 'method'");
      }
    }
    expectPunct("}");
  }

  int parseMethod(std::optional<std::string> owner) {
    lex_.take();  // method
    Token name = expectName("method name");
    Method m;
    m.owner = owner;
    m.name = name.text;
    expectPunct("(");
    if (!atPunct(")")) {
      for (;;) {
        Token p = expectName("parameter name");
        m.params.push_back(p.text);
        if (atPunct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
    }
    expectPunct(")");
    std::string key = m.ref().str();
    if (prog_.methodIndex.count(key)) fail(name, "duplicate method '" + key + "'");
    expectPunct("{");
    std::vector<RawLine> lines;
    while (!atPunct("}")) {
      lines.push_back(parseLine());
    }
    expectPunct("}");
    desugarInto(m, lines);
    int idx = static_cast<int>(prog_.methods.size());
    prog_.methods.push_back(std::move(m));
    prog_.methodIndex[key] = idx;
    return idx;
  }

  RawLine parseLine() {
    Token label = expectName("label");
    if (label.text == "entry" || label.text == "exit")
      fail(label, "label '" + label.text + "' is reserved for synthetic nodes");
    expectPunct(":");
    RawLine out;
    out.label = label.text;
    out.line = label.line;
    out.col = label.col;
    parseInstr(out);
    return out;
  }

  void parseInstr(RawLine& out) {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Name) fail(t, "expected instruction");
    if (t.text == "return") {
      lex_.take();
      Token v = expectName("returned variable");
      out.stmt = Return{v.text};
      return;
    }
    if (t.text == "goto") {
      lex_.take();
      Token l = expectName("target label");
      out.stmt = Goto{l.text};
      return;
    }
    if (t.text == "if") {
      lex_.take();
      Token g = lex_.take();
      if (g.kind != Tok::Name || g.text != "goto") fail(g, "expected 'goto'");
      Token l = expectName("target label");
      out.stmt = Branch{l.text};
      return;
    }
    if (t.text == "nop") {
      lex_.take();
      out.stmt = Nop{};
      return;
    }
    if (t.text == "static") {
      // static C.f = x
      lex_.take();
      Token cls = expectName("class name");
      expectPunct(".");
      Token field = expectName("static field name");
      expectPunct("=");
      Token rhs = expectName("variable");
      out.stmt = StaticStore{cls.text, field.text, rhs.text};
      return;
    }
    Token lhs = expectName("variable");
    if (atPunct(".")) {
      // x.f = y
      lex_.take();
      Token field = expectName("field name");
      expectPunct("=");
      Token rhs = expectName("variable");
      out.stmt = StoreField{lhs.text, field.text, rhs.text};
      return;
    }
    expectPunct("=");
    parseAssignRhs(out, lhs.text);
  }

  void parseAssignRhs(RawLine& out, const std::string& lhs) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Int) {
      Token v = lex_.take();
      out.stmt = ConstAssign{lhs, v.value};
      return;
    }
    if (t.kind == Tok::Punct && t.text == "-") {
      lex_.take();
      const Token& n = lex_.peek();
      if (n.kind == Tok::Int) {
        Token v = lex_.take();
        out.stmt = ConstAssign{lhs, -v.value};
      } else {
        Token v = expectName("variable");
        out.stmt = Neg{lhs, v.text};
      }
      return;
    }
    if (t.kind == Tok::Punct && t.text == "(") {
      // x = (C) y
      lex_.take();
      Token cls = expectName("class name");
      expectPunct(")");
      Token src = expectName("variable");
      out.stmt = CastRef{lhs, cls.text, src.text};
      return;
    }
    if (t.kind != Tok::Name) fail(t, "expected assignment right-hand side");
    if (t.text == "new") {
      lex_.take();
      Token cls = expectName("class name");
      out.stmt = NewObject{lhs, cls.text};
      return;
    }
    if (t.text == "null") {
      lex_.take();
      out.stmt = NullAssign{lhs};
      return;
    }
    if (t.text == "static") {
      lex_.take();
      Token cls = expectName("class name");
      expectPunct(".");
      Token field = expectName("static field name");
      out.stmt = StaticLoad{lhs, cls.text, field.text};
      return;
    }
    if (t.text == "call") {
      lex_.take();
      MethodRef ref = parseMethodRef();
      out.args = parseArgs();
      out.stmt = StaticCall{lhs, ref, {}};
      return;
    }
    if (t.text == "vcall") {
      lex_.take();
      Token recv = expectName("receiver variable");
      expectPunct(".");
      Token meth = expectName("method name");
      out.args = parseArgs();
      out.stmt = VirtualCall{lhs, recv.text, meth.text, {}};
      return;
    }
    Token first = lex_.take();  // plain variable
    if (atPunct("+") || atPunct("-") || atPunct("*")) {
      Token op = lex_.take();
      Token second = expectName("variable");
      out.stmt = BinOp{lhs, first.text, op.text[0], second.text};
      return;
    }
    if (atPunct(".")) {
      lex_.take();
      Token field = expectName("field name");
      out.stmt = LoadField{lhs, first.text, field.text};
      return;
    }
    out.stmt = Copy{lhs, first.text};
  }

  std::vector<ArgExpr> parseArgs() {
    expectPunct("(");
    std::vector<ArgExpr> args;
    if (!atPunct(")")) {
      for (;;) {
        const Token& t = lex_.peek();
        ArgExpr a;
        if (t.kind == Tok::Int) {
          a.kind = ArgExpr::Kind::Lit;
          a.value = lex_.take().value;
        } else if (t.kind == Tok::Punct && t.text == "-") {
          lex_.take();
          const Token& n = lex_.peek();
          if (n.kind == Tok::Int) {
            a.kind = ArgExpr::Kind::Lit;
            a.value = -lex_.take().value;
          } else {
            a.kind = ArgExpr::Kind::NegVar;
            a.name = expectName("variable").text;
          }
        } else if (t.kind == Tok::Name) {
          a.kind = ArgExpr::Kind::Var;
          a.name = lex_.take().text;
        } else {
          fail(t, "expected call argument");
        }
        args.push_back(a);
        if (atPunct(",")) {
          lex_.take();
          continue;
        }
        break;
      }
    }
    expectPunct(")");
    return args;
  }

  // Splits literal/negated call arguments into fresh temp-assignment nodes
  // (left-to-right, immediately before the call), then materializes the CFG:
  // synthetic entry/exit, fall-through successors, goto/branch/return edges.
  void desugarInto(Method& m, std::vector<RawLine>& lines) {
    std::vector<CfgNode> body;
    std::vector<int> sourceLines;
    for (RawLine& ln : lines) {
      if (!ln.args.empty() || isCall(ln.stmt)) {
        std::vector<std::string> finalArgs;
        int tempIdx = 0;
        for (const ArgExpr& a : ln.args) {
          if (a.kind == ArgExpr::Kind::Var) {
            finalArgs.push_back(a.name);
            continue;
          }
          std::string tempVar = "$" + ln.label + "_" + std::to_string(tempIdx);
          std::string tempLabel = ln.label + "$" + std::to_string(tempIdx);
          ++tempIdx;
          Statement def = a.kind == ArgExpr::Kind::Lit
                              ? Statement{ConstAssign{tempVar, a.value}}
                              : Statement{Neg{tempVar, a.name}};
          body.push_back(CfgNode{tempLabel, def, {}});
          sourceLines.push_back(ln.line);
          finalArgs.push_back(tempVar);
        }
        if (auto* sc = std::get_if<StaticCall>(&ln.stmt)) {
          sc->args = finalArgs;
        } else {
          std::get<VirtualCall>(ln.stmt).args = finalArgs;
        }
      }
      body.push_back(CfgNode{ln.label, ln.stmt, {}});
      sourceLines.push_back(ln.line);
    }

    m.nodes.clear();
    m.nodes.push_back(CfgNode{"entry", Nop{}, {}});
    for (CfgNode& n : body) m.nodes.push_back(std::move(n));
    m.nodes.push_back(CfgNode{"exit", Nop{}, {}});
    m.entry = 0;
    m.exit = static_cast<int>(m.nodes.size()) - 1;

    for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i) {
      auto [it, inserted] = m.labelIndex.insert({m.nodes[i].label, i});
      if (!inserted) {
        int srcLine = (i > 0 && i - 1 < static_cast<int>(sourceLines.size())) ? sourceLines[i - 1] : 1;
        throw ParseError(srcLine, 1, "duplicate label '" + m.nodes[i].label + "'");
      }
    }

    auto target = [&](const std::string& label, int atLine) {
      auto it = m.labelIndex.find(label);
      if (it == m.labelIndex.end())
        throw ParseError(atLine, 1, "undefined label '" + label + "'");
      return it->second;
    };

    for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i) {
      CfgNode& n = m.nodes[i];
      int fall = i + 1 <= m.exit ? i + 1 : m.exit;
      int line = (i > 0 && i - 1 < static_cast<int>(sourceLines.size())) ? sourceLines[i - 1] : 1;
      if (i == m.exit) continue;  // no successors
      if (auto* g = std::get_if<Goto>(&n.stmt)) {
        n.succ = {target(g->target, line)};
      } else if (auto* b = std::get_if<Branch>(&n.stmt)) {
        n.succ = {fall, target(b->target, line)};
      } else if (std::holds_alternative<Return>(n.stmt)) {
        n.succ = {m.exit};
      } else {
        n.succ = {fall};
      }
    }

    // locals: every assigned variable that is not a parameter
    std::set<std::string> paramSet(m.params.begin(), m.params.end());
    std::set<std::string> localSet;
    for (const CfgNode& n : m.nodes) {
      std::string def = definedVar(n.stmt);
      if (!def.empty() && !paramSet.count(def)) localSet.insert(def);
    }
    m.locals.assign(localSet.begin(), localSet.end());
  }

  // Traversal orders and predecessor lists; run once the CFG shape is final.
  void finalizeMethod(int idx) {
    Method& m = prog_.methods[idx];
    int n = static_cast<int>(m.nodes.size());
    m.preds.assign(n, {});
    for (int i = 0; i < n; ++i) {
      for (int s : m.nodes[i].succ) m.preds[s].push_back(i);
    }
    m.rpo = postorderReversed(m, /*backward=*/false);
    m.rpoBack = postorderReversed(m, /*backward=*/true);
    m.orderFwd = rankFrom(m.rpo, n);
    m.orderBwd = rankFrom(m.rpoBack, n);
    for (int i = 0; i < n; ++i) {
      if (auto* nw = std::get_if<NewObject>(&m.nodes[i].stmt)) {
        prog_.allocSites[{idx, m.nodes[i].label}] = nw->klass;
      }
    }
  }

  std::vector<int> postorderReversed(const Method& m, bool backward) {
    int n = static_cast<int>(m.nodes.size());
    int root = backward ? m.exit : m.entry;
    std::vector<bool> seen(n, false);
    std::vector<int> post;
    // iterative DFS preserving successor order
    std::vector<std::pair<int, size_t>> stack{{root, 0}};
    seen[root] = true;
    auto edges = [&](int v) -> const std::vector<int>& {
      return backward ? m.preds[v] : m.nodes[v].succ;
    };
    while (!stack.empty()) {
      auto& [v, i] = stack.back();
      if (i < edges(v).size()) {
        int w = edges(v)[i++];
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back({w, 0});
        }
      } else {
        post.push_back(v);
        stack.pop_back();
      }
    }
    return {post.rbegin(), post.rend()};
  }

  std::vector<int> rankFrom(const std::vector<int>& order, int n) {
    std::vector<int> rank(n, -1);
    int next = 0;
    for (int v : order) rank[v] = next++;
    for (int v = 0; v < n; ++v) {
      if (rank[v] < 0) rank[v] = next++;  // unreachable: stable tail
    }
    return rank;
  }

  void resolveHierarchy() {
    for (const auto& [cls, line, col] : superDeclSites_) {
      const ClassDef* c = prog_.findClass(cls);
      if (!prog_.classIndex.count(*c->super))
        throw ParseError(line, col, "undeclared superclass '" + *c->super + "'");
    }
    // cycle check: walk the super chain, flagging any revisited class
    for (const ClassDef& c : prog_.classes) {
      std::set<std::string> onPath{c.name};
      const ClassDef* cur = &c;
      while (cur->super) {
        if (!onPath.insert(*cur->super).second)
          throw ParseError(1, 1, "cyclic class hierarchy involving '" + c.name + "'");
        cur = prog_.findClass(*cur->super);
      }
    }
  }

  Lexer lex_;
  Program prog_;
  struct SuperSite { std::string cls; int line, col; };
  std::vector<SuperSite> superDeclSites_;
};

}  // namespace

Program parseProgram(const std::string& text) { return Parser(text).run(); }

}  // namespace ipa
