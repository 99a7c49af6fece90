#include "ipa/ir.hpp"

#include <algorithm>
#include <sstream>

namespace ipa {

int Method::indexOfLabel(const std::string& label) const {
  auto it = labelIndex.find(label);
  return it == labelIndex.end() ? -1 : it->second;
}

const ClassDef* Program::findClass(const std::string& name) const {
  auto it = classIndex.find(name);
  return it == classIndex.end() ? nullptr : &classes[it->second];
}

std::optional<int> Program::findMethod(const MethodRef& ref) const {
  auto it = methodIndex.find(ref.str());
  if (it == methodIndex.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Program::siteClass(int method, const std::string& label) const {
  auto it = allocSites.find({method, label});
  if (it == allocSites.end()) return std::nullopt;
  return it->second;
}

bool isCall(const Statement& s) {
  return std::holds_alternative<StaticCall>(s) || std::holds_alternative<VirtualCall>(s);
}

std::string definedVar(const Statement& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstAssign> || std::is_same_v<T, Copy> ||
                      std::is_same_v<T, Neg> || std::is_same_v<T, BinOp> ||
                      std::is_same_v<T, NewObject> || std::is_same_v<T, LoadField> ||
                      std::is_same_v<T, CastRef> || std::is_same_v<T, NullAssign> ||
                      std::is_same_v<T, StaticLoad> || std::is_same_v<T, StaticCall> ||
                      std::is_same_v<T, VirtualCall>) {
          return v.lhs;
        } else if constexpr (std::is_same_v<T, Return>) {
          return kRetVar;
        } else {
          return "";
        }
      },
      s);
}

std::vector<std::string> usedVars(const Statement& s) {
  return std::visit(
      [](const auto& v) -> std::vector<std::string> {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Copy> || std::is_same_v<T, Neg> ||
                      std::is_same_v<T, CastRef>) {
          return {v.rhs};
        } else if constexpr (std::is_same_v<T, BinOp>) {
          return {v.left, v.right};
        } else if constexpr (std::is_same_v<T, LoadField>) {
          return {v.base};
        } else if constexpr (std::is_same_v<T, StoreField>) {
          return {v.base, v.rhs};
        } else if constexpr (std::is_same_v<T, StaticStore>) {
          return {v.rhs};
        } else if constexpr (std::is_same_v<T, StaticCall>) {
          return v.args;
        } else if constexpr (std::is_same_v<T, VirtualCall>) {
          std::vector<std::string> out{v.receiver};
          out.insert(out.end(), v.args.begin(), v.args.end());
          return out;
        } else if constexpr (std::is_same_v<T, Return>) {
          return {v.var};
        } else {
          return {};
        }
      },
      s);
}

// ---- validate ---------------------------------------------------------------

namespace {

bool anyClassDeclares(const Program& p, const std::string& methodName,
                      size_t arity, bool checkArity) {
  for (const ClassDef& c : p.classes) {
    for (int mi : c.methods) {
      if (p.methods[mi].name == methodName &&
          (!checkArity || p.methods[mi].params.size() == arity)) {
        return true;
      }
    }
  }
  return false;
}

bool anyClassHasField(const Program& p, const std::string& field) {
  for (const ClassDef& c : p.classes) {
    if (std::find(c.fields.begin(), c.fields.end(), field) != c.fields.end()) return true;
  }
  return false;
}

}  // namespace

std::vector<Diagnostic> validate(const Program& p) {
  std::vector<Diagnostic> out;
  std::set<std::string> emitted;
  auto report = [&](Diagnostic::Severity sev, const std::string& msg) {
    if (emitted.insert(msg).second) out.push_back({sev, msg});
  };
  auto warn = [&](const std::string& msg) { report(Diagnostic::Severity::Warning, msg); };
  auto error = [&](const std::string& msg) { report(Diagnostic::Severity::Error, msg); };

  for (const Method& m : p.methods) {
    const std::string mname = m.ref().str();
    std::set<std::string> vars(m.params.begin(), m.params.end());
    vars.insert(m.locals.begin(), m.locals.end());
    std::set<int> reachable(m.rpo.begin(), m.rpo.end());

    for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i) {
      const CfgNode& n = m.nodes[i];
      const std::string at = " at " + mname + "." + n.label;
      if (i != m.entry && i != m.exit && !reachable.count(i)) {
        warn("unreachable node '" + n.label + "' in method '" + mname + "'");
      }
      for (const std::string& v : usedVars(n.stmt)) {
        if (!vars.count(v)) {
          error("undefined variable '" + v + "' in method '" + mname + "'");
        }
      }
      if (const auto* sc = std::get_if<StaticCall>(&n.stmt)) {
        auto callee = p.findMethod(sc->target);
        if (!callee) {
          warn("call to undeclared method '" + sc->target.str() + "'" + at +
               " (treated as a default site)");
        } else if (p.methods[*callee].params.size() != sc->args.size()) {
          error("call to '" + sc->target.str() + "' passes " +
                std::to_string(sc->args.size()) + " argument(s); declared with " +
                std::to_string(p.methods[*callee].params.size()) + at);
        }
      } else if (const auto* vc = std::get_if<VirtualCall>(&n.stmt)) {
        if (!anyClassDeclares(p, vc->method, 0, false)) {
          warn("no class declares method '" + vc->method + "'" + at +
               " (treated as a default site)");
        } else if (!anyClassDeclares(p, vc->method, vc->args.size(), true)) {
          error("no declaration of '" + vc->method + "' accepts " +
                std::to_string(vc->args.size()) + " argument(s)" + at);
        }
      } else if (const auto* nw = std::get_if<NewObject>(&n.stmt)) {
        if (!p.findClass(nw->klass)) error("unknown class '" + nw->klass + "'" + at);
      } else if (const auto* cast = std::get_if<CastRef>(&n.stmt)) {
        if (!p.findClass(cast->klass)) error("unknown class '" + cast->klass + "'" + at);
      } else if (const auto* ld = std::get_if<LoadField>(&n.stmt)) {
        if (!anyClassHasField(p, ld->field)) {
          warn("no class declares field '" + ld->field + "'" + at);
        }
      } else if (const auto* st = std::get_if<StoreField>(&n.stmt)) {
        if (!anyClassHasField(p, st->field)) {
          warn("no class declares field '" + st->field + "'" + at);
        }
      } else if (const auto* sl = std::get_if<StaticLoad>(&n.stmt)) {
        const ClassDef* c = p.findClass(sl->klass);
        if (!c) {
          error("unknown class '" + sl->klass + "'" + at);
        } else if (std::find(c->staticFields.begin(), c->staticFields.end(), sl->field) ==
                   c->staticFields.end()) {
          warn("class '" + sl->klass + "' has no static field '" + sl->field + "'" + at);
        }
      } else if (const auto* ss = std::get_if<StaticStore>(&n.stmt)) {
        const ClassDef* c = p.findClass(ss->klass);
        if (!c) {
          error("unknown class '" + ss->klass + "'" + at);
        } else if (std::find(c->staticFields.begin(), c->staticFields.end(), ss->field) ==
                   c->staticFields.end()) {
          warn("class '" + ss->klass + "' has no static field '" + ss->field + "'" + at);
        }
      }
    }
  }
  return out;
}

// ---- printing ---------------------------------------------------------------

namespace {

std::string printStmt(const Statement& s) {
  std::ostringstream os;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Nop>) {
          os << "nop";
        } else if constexpr (std::is_same_v<T, ConstAssign>) {
          os << v.lhs << " = " << v.value;
        } else if constexpr (std::is_same_v<T, Copy>) {
          os << v.lhs << " = " << v.rhs;
        } else if constexpr (std::is_same_v<T, Neg>) {
          os << v.lhs << " = -" << v.rhs;
        } else if constexpr (std::is_same_v<T, BinOp>) {
          os << v.lhs << " = " << v.left << " " << v.op << " " << v.right;
        } else if constexpr (std::is_same_v<T, NewObject>) {
          os << v.lhs << " = new " << v.klass;
        } else if constexpr (std::is_same_v<T, LoadField>) {
          os << v.lhs << " = " << v.base << "." << v.field;
        } else if constexpr (std::is_same_v<T, StoreField>) {
          os << v.base << "." << v.field << " = " << v.rhs;
        } else if constexpr (std::is_same_v<T, CastRef>) {
          os << v.lhs << " = (" << v.klass << ") " << v.rhs;
        } else if constexpr (std::is_same_v<T, NullAssign>) {
          os << v.lhs << " = null";
        } else if constexpr (std::is_same_v<T, StaticLoad>) {
          os << v.lhs << " = static " << v.klass << "." << v.field;
        } else if constexpr (std::is_same_v<T, StaticStore>) {
          os << "static " << v.klass << "." << v.field << " = " << v.rhs;
        } else if constexpr (std::is_same_v<T, StaticCall>) {
          os << v.lhs << " = call " << v.target.str() << "(";
          for (size_t i = 0; i < v.args.size(); ++i) os << (i ? ", " : "") << v.args[i];
          os << ")";
        } else if constexpr (std::is_same_v<T, VirtualCall>) {
          os << v.lhs << " = vcall " << v.receiver << "." << v.method << "(";
          for (size_t i = 0; i < v.args.size(); ++i) os << (i ? ", " : "") << v.args[i];
          os << ")";
        } else if constexpr (std::is_same_v<T, Return>) {
          os << "return " << v.var;
        } else if constexpr (std::is_same_v<T, Branch>) {
          os << "if goto " << v.target;
        } else if constexpr (std::is_same_v<T, Goto>) {
          os << "goto " << v.target;
        }
      },
      s);
  return os.str();
}

void printMethod(std::ostringstream& os, const Method& m, const std::string& indent) {
  os << indent << "method " << m.name << "(";
  for (size_t i = 0; i < m.params.size(); ++i) os << (i ? ", " : "") << m.params[i];
  os << ") {\n";
  for (int i = m.entry + 1; i < m.exit; ++i) {
    os << indent << "  " << m.nodes[i].label << ": " << printStmt(m.nodes[i].stmt) << "\n";
  }
  os << indent << "}\n";
}

}  // namespace

std::string printProgram(const Program& p) {
  std::ostringstream os;
  for (const ClassDef& c : p.classes) {
    os << "class " << c.name;
    if (c.super) os << " extends " << *c.super;
    os << " {\n";
    for (const std::string& f : c.fields) os << "  field " << f << "\n";
    for (const std::string& f : c.staticFields) os << "  static field " << f << "\n";
    for (int mi : c.methods) printMethod(os, p.methods[mi], "  ");
    os << "}\n";
  }
  for (const Method& m : p.methods) {
    if (!m.owner) printMethod(os, m, "");
  }
  os << "entry " << p.entryMethod().ref().str() << "\n";
  return os.str();
}

// ---- traversal & hierarchy ---------------------------------------------------

std::vector<std::string> reversePostorder(const Method& m) {
  std::vector<std::string> out;
  out.reserve(m.rpo.size());
  for (int i : m.rpo) out.push_back(m.nodes[i].label);
  return out;
}

int lookupDispatch(const Program& p, const std::string& klass,
                   const std::string& methodName) {
  const ClassDef* c = p.findClass(klass);
  if (!c) throw std::out_of_range("unknown class '" + klass + "'");
  while (c) {
    for (int mi : c->methods) {
      if (p.methods[mi].name == methodName) return mi;
    }
    c = c->super ? p.findClass(*c->super) : nullptr;
  }
  throw std::out_of_range("no declaration of '" + methodName + "' at or above '" + klass + "'");
}

std::set<std::string> subtypes(const Program& p, const std::string& klass) {
  std::set<std::string> out{klass};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const ClassDef& c : p.classes) {
      if (c.super && out.count(*c.super) && !out.count(c.name)) {
        out.insert(c.name);
        grew = true;
      }
    }
  }
  return out;
}

}  // namespace ipa
