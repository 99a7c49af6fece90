#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Textual IR: classes with fields and methods, free methods, labeled
// straight-line statements with explicit branch/goto control flow. The parser
// produces an immutable Program whose methods carry a CFG with one synthetic
// entry and one synthetic exit node.

namespace ipa {

// Hidden variable written by Return nodes and read by call-exit flow
// functions. Names starting with '$' are reserved for the parser/engine and
// are omitted from canonical value printing.
inline const std::string kRetVar = "$ret";

inline bool isHiddenVar(const std::string& name) {
  return !name.empty() && name[0] == '$';
}

struct MethodRef {
  std::optional<std::string> klass;  // set for class methods ("C.m")
  std::string name;

  std::string str() const { return klass ? *klass + "." + name : name; }
  friend bool operator==(const MethodRef&, const MethodRef&) = default;
  friend auto operator<=>(const MethodRef&, const MethodRef&) = default;
};

// ---- Statement forms -------------------------------------------------------

struct Nop {};
struct ConstAssign { std::string lhs; long long value = 0; };
struct Copy { std::string lhs, rhs; };
struct Neg { std::string lhs, rhs; };
struct BinOp { std::string lhs, left; char op = '+'; std::string right; };
struct NewObject { std::string lhs, klass; };
struct LoadField { std::string lhs, base, field; };
struct StoreField { std::string base, field, rhs; };
struct CastRef { std::string lhs, klass, rhs; };
struct NullAssign { std::string lhs; };
struct StaticLoad { std::string lhs, klass, field; };
struct StaticStore { std::string klass, field, rhs; };
struct StaticCall { std::string lhs; MethodRef target; std::vector<std::string> args; };
struct VirtualCall { std::string lhs, receiver, method; std::vector<std::string> args; };
struct Return { std::string var; };
struct Branch { std::string target; };  // "if goto L": nondeterministic condition
struct Goto { std::string target; };

using Statement =
    std::variant<Nop, ConstAssign, Copy, Neg, BinOp, NewObject, LoadField,
                 StoreField, CastRef, NullAssign, StaticLoad, StaticStore,
                 StaticCall, VirtualCall, Return, Branch, Goto>;

bool isCall(const Statement& s);
// Variable written by the statement ("" if none). Return defines kRetVar.
std::string definedVar(const Statement& s);
// Variables read by the statement, in syntactic order (may repeat).
std::vector<std::string> usedVars(const Statement& s);

// ---- CFG -------------------------------------------------------------------

struct CfgNode {
  std::string label;
  Statement stmt;
  std::vector<int> succ;  // branch: {fall-through, target}; others ≤ 1 edge
};

struct Method {
  std::optional<std::string> owner;  // declaring class, absent for free methods
  std::string name;
  std::vector<std::string> params;
  std::vector<std::string> locals;  // assigned variables incl. parser temps, $ret
  std::vector<CfgNode> nodes;
  int entry = -1;  // synthetic nop, no predecessors
  int exit = -1;   // synthetic nop, no successors
  std::map<std::string, int> labelIndex;
  std::vector<std::vector<int>> preds;
  std::vector<int> rpo;          // reachable nodes in reverse postorder
  std::vector<int> rpoBack;      // reverse postorder of the reversed CFG
  std::vector<int> orderFwd;     // node -> worklist rank, forward direction
  std::vector<int> orderBwd;     // node -> worklist rank, backward direction

  MethodRef ref() const { return MethodRef{owner, name}; }
  const CfgNode& node(int i) const { return nodes[i]; }
  int indexOfLabel(const std::string& label) const;
};

struct ClassDef {
  std::string name;
  std::optional<std::string> super;
  std::vector<std::string> fields;
  std::vector<std::string> staticFields;
  std::vector<int> methods;  // indices into Program::methods
};

struct Program {
  std::vector<ClassDef> classes;
  std::map<std::string, int> classIndex;
  std::vector<Method> methods;
  std::map<std::string, int> methodIndex;  // key: MethodRef::str()
  int entry = -1;                          // entry method index
  // allocation sites: (method index, node label) -> class name
  std::map<std::pair<int, std::string>, std::string> allocSites;

  const Method& entryMethod() const { return methods[entry]; }
  const ClassDef* findClass(const std::string& name) const;
  std::optional<int> findMethod(const MethodRef& ref) const;
  std::optional<std::string> siteClass(int method, const std::string& label) const;
};

// ---- Diagnostics -----------------------------------------------------------

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("parse error at line " + std::to_string(line) + ", col " +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
};

struct Diagnostic {
  enum class Severity { Warning, Error };
  Severity severity = Severity::Error;
  std::string message;
};

// ---- Operations -------------------------------------------------------------

// Parses and finalizes a program: desugars literal/negated call arguments into
// fresh temp nodes, inserts synthetic entry/exit nodes, resolves successors,
// and computes traversal orders. Throws ParseError on syntax errors, duplicate
// labels/names, undefined labels, undeclared superclasses/entry, and hierarchy
// cycles.
Program parseProgram(const std::string& text);

// Semantic checks on a parsed program: undefined variables, static-call arity,
// undeclared classes/fields, calls to undeclared methods (warning: such sites
// are analyzable as default sites), unreachable nodes (warning).
std::vector<Diagnostic> validate(const Program& p);

// Canonical text form; parseProgram(printProgram(p)) reproduces p.
// Synthetic entry/exit nodes are not printed; desugared temps are.
std::string printProgram(const Program& p);

// Labels of reachable nodes in reverse postorder (entry first; exit last when
// every node reaches the exit).
std::vector<std::string> reversePostorder(const Method& m);

// Most-derived declaration of methodName at or above klass. Throws
// std::out_of_range if the hierarchy does not declare it.
int lookupDispatch(const Program& p, const std::string& klass,
                   const std::string& methodName);

// Reflexive-transitive subclasses of klass.
std::set<std::string> subtypes(const Program& p, const std::string& klass);

}  // namespace ipa
