#pragma once

#include <map>
#include <string>

#include "ipa/engine.hpp"
#include "ipa/ir.hpp"

// Forward sign analysis over scalar variables: each variable is mapped to one
// of {unreached/uninitialized, negative, zero, positive, unknown}. Reference-
// producing statements (new/null/loads/casts) bind the target variable to
// unknown. Virtual calls are resolved by receiver-independent hierarchy
// lookup (name and arity).

namespace ipa {

enum class Sign : unsigned char { Top, Neg, Zero, Pos, Bot };

Sign meetSign(Sign a, Sign b);
Sign negSign(Sign s);
Sign addSign(Sign a, Sign b);   // subtraction is addSign(a, negSign(b))
Sign mulSign(Sign a, Sign b);
Sign signOfConst(long long v);
char signChar(Sign s);  // one of T - 0 + b

// Canonical environment: variables bound to Top are absent, so the empty map
// is the lattice top. Hidden ($-prefixed) variables participate in meets and
// equality but are omitted from printing.
using SignEnv = std::map<std::string, Sign>;

class SignAnalysis : public AnalysisClient<SignEnv> {
 public:
  explicit SignAnalysis(const Program& p) : prog_(p) {}

  SignEnv topValue() override { return {}; }
  SignEnv boundaryValue(const Method&) override { return {}; }
  SignEnv meet(const SignEnv& a, const SignEnv& b) override;
  bool valuesEqual(const SignEnv& a, const SignEnv& b) override { return a == b; }
  SignEnv normalFlow(const Context<SignEnv>& ctx, int node, const SignEnv& in) override;
  SignEnv callEntryFlow(const Context<SignEnv>& ctx, int node, int target,
                        const SignEnv& in) override;
  SignEnv callExitFlow(const Context<SignEnv>& ctx, int node, int target,
                       const SignEnv& exitValue) override;
  SignEnv callLocalFlow(const Context<SignEnv>& ctx, int node, const SignEnv& in) override;
  CallResolution resolveTargets(const Context<SignEnv>& ctx, int node,
                                const SignEnv& in) override;
  std::string printValue(const SignEnv& v) override;

 private:
  const Method& methodOf(const Context<SignEnv>& ctx) const {
    return prog_.methods[ctx.method];
  }
  const Program& prog_;
};

// Receiver-independent virtual-call resolution shared by the scalar clients:
// dispatch the name on every declared class, keep targets matching the arity.
CallResolution resolveByHierarchy(const Program& p, const Statement& stmt);

AnalysisResult<SignEnv> runSignAnalysis(const Program& p, const SolveOptions& opts = {});

}  // namespace ipa
