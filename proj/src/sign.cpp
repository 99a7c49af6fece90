#include "ipa/sign.hpp"

#include <algorithm>
#include <sstream>

namespace ipa {

Sign meetSign(Sign a, Sign b) {
  if (a == Sign::Top) return b;
  if (b == Sign::Top) return a;
  if (a == b) return a;
  return Sign::Bot;
}

Sign negSign(Sign s) {
  switch (s) {
    case Sign::Neg: return Sign::Pos;
    case Sign::Pos: return Sign::Neg;
    default: return s;
  }
}

Sign addSign(Sign a, Sign b) {
  if (a == Sign::Top || b == Sign::Top) return Sign::Top;
  if (a == Sign::Zero) return b;
  if (b == Sign::Zero) return a;
  if (a == b) return a;  // +,+ and -,- and b,b
  return Sign::Bot;      // mixed signs may cancel either way
}

Sign mulSign(Sign a, Sign b) {
  if (a == Sign::Top || b == Sign::Top) return Sign::Top;
  if (a == Sign::Zero || b == Sign::Zero) return Sign::Zero;
  if (a == Sign::Bot || b == Sign::Bot) return Sign::Bot;
  return a == b ? Sign::Pos : Sign::Neg;
}

Sign signOfConst(long long v) {
  if (v > 0) return Sign::Pos;
  if (v < 0) return Sign::Neg;
  return Sign::Zero;
}

char signChar(Sign s) {
  switch (s) {
    case Sign::Top: return 'T';
    case Sign::Neg: return '-';
    case Sign::Zero: return '0';
    case Sign::Pos: return '+';
    case Sign::Bot: return 'b';
  }
  return '?';
}

namespace {

Sign lookup(const SignEnv& env, const std::string& var) {
  auto it = env.find(var);
  return it == env.end() ? Sign::Top : it->second;
}

void bindVar(SignEnv& env, const std::string& var, Sign s) {
  if (s == Sign::Top) {
    env.erase(var);
  } else {
    env[var] = s;
  }
}

}  // namespace

SignEnv SignAnalysis::meet(const SignEnv& a, const SignEnv& b) {
  SignEnv out = a;
  for (const auto& [var, s] : b) {
    bindVar(out, var, meetSign(lookup(a, var), s));
  }
  return out;
}

SignEnv SignAnalysis::normalFlow(const Context<SignEnv>& ctx, int node, const SignEnv& in) {
  const Statement& stmt = methodOf(ctx).nodes[node].stmt;
  SignEnv out = in;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstAssign>) {
          bindVar(out, s.lhs, signOfConst(s.value));
        } else if constexpr (std::is_same_v<T, Copy>) {
          bindVar(out, s.lhs, lookup(in, s.rhs));
        } else if constexpr (std::is_same_v<T, Neg>) {
          bindVar(out, s.lhs, negSign(lookup(in, s.rhs)));
        } else if constexpr (std::is_same_v<T, BinOp>) {
          Sign l = lookup(in, s.left), r = lookup(in, s.right);
          Sign v = s.op == '*'   ? mulSign(l, r)
                   : s.op == '+' ? addSign(l, r)
                                 : addSign(l, negSign(r));
          bindVar(out, s.lhs, v);
        } else if constexpr (std::is_same_v<T, NewObject> || std::is_same_v<T, LoadField> ||
                             std::is_same_v<T, CastRef> || std::is_same_v<T, NullAssign> ||
                             std::is_same_v<T, StaticLoad>) {
          // reference or heap value: not a tracked scalar
          bindVar(out, s.lhs, Sign::Bot);
        } else if constexpr (std::is_same_v<T, Return>) {
          bindVar(out, kRetVar, lookup(in, s.var));
        }
        // Nop, StoreField, StaticStore, Branch, Goto: no scalar effect
      },
      stmt);
  return out;
}

SignEnv SignAnalysis::callEntryFlow(const Context<SignEnv>& ctx, int node, int target,
                                    const SignEnv& in) {
  const Statement& stmt = methodOf(ctx).nodes[node].stmt;
  const std::vector<std::string>& args = std::visit(
      [](const auto& s) -> const std::vector<std::string>& {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, StaticCall> || std::is_same_v<T, VirtualCall>) {
          return s.args;
        } else {
          static const std::vector<std::string> none;
          return none;
        }
      },
      stmt);
  const Method& callee = prog_.methods[target];
  SignEnv entry;
  for (size_t i = 0; i < callee.params.size() && i < args.size(); ++i) {
    bindVar(entry, callee.params[i], lookup(in, args[i]));
  }
  return entry;
}

SignEnv SignAnalysis::callExitFlow(const Context<SignEnv>& ctx, int node, int,
                                   const SignEnv& exitValue) {
  SignEnv back;
  bindVar(back, definedVar(methodOf(ctx).nodes[node].stmt), lookup(exitValue, kRetVar));
  return back;
}

SignEnv SignAnalysis::callLocalFlow(const Context<SignEnv>& ctx, int node, const SignEnv& in) {
  const Statement& stmt = methodOf(ctx).nodes[node].stmt;
  SignEnv out = in;
  // resolved targets deliver the result through the exit flow; a call that may
  // leave the program returns an unknown scalar
  bindVar(out, definedVar(stmt),
       resolveByHierarchy(prog_, stmt).isDefault ? Sign::Bot : Sign::Top);
  return out;
}

CallResolution SignAnalysis::resolveTargets(const Context<SignEnv>& ctx, int node,
                                            const SignEnv&) {
  return resolveByHierarchy(prog_, methodOf(ctx).nodes[node].stmt);
}

std::string SignAnalysis::printValue(const SignEnv& v) {
  std::ostringstream os;
  bool any = false;
  for (const auto& [var, s] : v) {
    if (isHiddenVar(var)) continue;
    os << (any ? " " : "") << var << "^" << signChar(s);
    any = true;
  }
  return any ? os.str() : "T";
}

CallResolution resolveByHierarchy(const Program& p, const Statement& stmt) {
  CallResolution out;
  if (const auto* sc = std::get_if<StaticCall>(&stmt)) {
    if (auto m = p.findMethod(sc->target)) {
      out.targets.push_back(*m);
    } else {
      out.isDefault = true;
    }
    return out;
  }
  const auto& vc = std::get<VirtualCall>(stmt);
  std::set<int> targets;
  for (const ClassDef& c : p.classes) {
    try {
      int m = lookupDispatch(p, c.name, vc.method);
      if (p.methods[m].params.size() == vc.args.size()) targets.insert(m);
    } catch (const std::out_of_range&) {
    }
  }
  out.targets.assign(targets.begin(), targets.end());
  if (out.targets.empty()) out.isDefault = true;
  return out;
}

AnalysisResult<SignEnv> runSignAnalysis(const Program& p, const SolveOptions& opts) {
  SignAnalysis client(p);
  return solve(p, client, opts);
}

}  // namespace ipa
