#include "edgeflow/policy.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace edgeflow {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Jobs: return "jobs";
    case PolicyKind::Cpu: return "cpu";
    case PolicyKind::Mem: return "mem";
    case PolicyKind::Temp: return "temp";
    case PolicyKind::AllOf: return "all-of";
    case PolicyKind::AnyOf: return "any-of";
    case PolicyKind::AlwaysLocal: return "always-local";
    case PolicyKind::AlwaysRemote: return "always-remote";
  }
  return "?";
}

std::string_view to_string(Target target) { return target == Target::Local ? "local" : "remote"; }

namespace {

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

bool is_metric(PolicyKind k) {
  return k == PolicyKind::Jobs || k == PolicyKind::Cpu || k == PolicyKind::Mem || k == PolicyKind::Temp;
}

void check_threshold(PolicyKind kind, double value, std::size_t pos) {
  auto fail = [&](const std::string& why) {
    throw PolicyError(PolicyError::Code::OutOfRange,
                      std::string(to_string(kind)) + " threshold " + number_text(value) + " " + why, pos);
  };
  if (!std::isfinite(value)) fail("is not finite");
  switch (kind) {
    case PolicyKind::Jobs:
      if (value < 0 || value != std::floor(value)) fail("must be a non-negative integer");
      break;
    case PolicyKind::Cpu:
    case PolicyKind::Mem:
      if (value < 0.0 || value > 1.0) fail("must be a fraction in [0, 1]");
      break;
    case PolicyKind::Temp:
      if (value < kMinTempC || value > kMaxTempC) fail("must be within [-20, 120] degrees C");
      break;
    default: break;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  PolicySpec parse() {
    PolicySpec spec = parse_spec();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return spec;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw PolicyError(PolicyError::Code::Grammar,
                      "policy '" + std::string(text_) + "': " + what + " at offset " + std::to_string(pos_), pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view word() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double number() {
    skip_space();
    std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    last_number_pos_ = start;
    return value;
  }

  PolicySpec parse_spec() {
    std::size_t start = (skip_space(), pos_);
    std::string_view name = word();
    PolicySpec spec;
    if (name == "jobs") spec.kind = PolicyKind::Jobs;
    else if (name == "cpu") spec.kind = PolicyKind::Cpu;
    else if (name == "mem") spec.kind = PolicyKind::Mem;
    else if (name == "temp") spec.kind = PolicyKind::Temp;
    else if (name == "all-of") spec.kind = PolicyKind::AllOf;
    else if (name == "any-of") spec.kind = PolicyKind::AnyOf;
    else if (name == "always-local") return PolicySpec{PolicyKind::AlwaysLocal, 0.0, {}};
    else if (name == "always-remote") return PolicySpec{PolicyKind::AlwaysRemote, 0.0, {}};
    else {
      pos_ = start;
      fail(name.empty() ? "expected a policy kind" : "unknown policy kind '" + std::string(name) + "'");
    }

    if (is_metric(spec.kind)) {
      if (!accept(':')) fail("expected ':'");
      spec.threshold = number();
      check_threshold(spec.kind, spec.threshold, last_number_pos_);
      return spec;
    }

    if (!accept('(')) fail("expected '('");
    do {
      spec.children.push_back(parse_spec());
    } while (accept(','));
    if (!accept(')')) fail("expected ',' or ')'");
    return spec;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t last_number_pos_ = 0;
};

}  // namespace

PolicySpec parse_policy(std::string_view spec) { return Parser(spec).parse(); }

std::string to_string(const PolicySpec& policy) {
  switch (policy.kind) {
    case PolicyKind::AlwaysLocal:
    case PolicyKind::AlwaysRemote:
      return std::string(to_string(policy.kind));
    case PolicyKind::AllOf:
    case PolicyKind::AnyOf: {
      std::string out = std::string(to_string(policy.kind)) + "(";
      for (std::size_t i = 0; i < policy.children.size(); ++i) {
        if (i) out += ",";
        out += to_string(policy.children[i]);
      }
      return out + ")";
    }
    default:
      return std::string(to_string(policy.kind)) + ":" + number_text(policy.threshold);
  }
}

void check_policy(const PolicySpec& policy) {
  if (is_metric(policy.kind)) check_threshold(policy.kind, policy.threshold, 0);
  if (policy.kind == PolicyKind::AllOf || policy.kind == PolicyKind::AnyOf) {
    if (policy.children.empty())
      throw PolicyError(PolicyError::Code::Grammar, "combinator without children", 0);
    for (const auto& c : policy.children) check_policy(c);
  }
}

namespace {

OffloadDecision compare(std::string_view metric, double observed, double threshold, bool integral) {
  const bool remote = observed >= threshold;
  auto fmt = [&](double v) { return integral ? std::to_string(static_cast<long long>(v)) : number_text(v); };
  return {remote ? Target::Remote : Target::Local,
          std::string(metric) + " " + fmt(observed) + (remote ? " >= " : " < ") + fmt(threshold)};
}

}  // namespace

OffloadDecision decide(const PolicySpec& policy, const MetricsSnapshot& s) {
  switch (policy.kind) {
    case PolicyKind::Jobs:
      return compare("jobs", static_cast<double>(s.jobs_in_flight), policy.threshold, true);
    case PolicyKind::Cpu: return compare("cpu", s.cpu_util, policy.threshold, false);
    case PolicyKind::Mem: return compare("mem", s.mem_util, policy.threshold, false);
    case PolicyKind::Temp: return compare("temp", s.cpu_temp_c, policy.threshold, false);
    case PolicyKind::AlwaysLocal: return {Target::Local, "always-local"};
    case PolicyKind::AlwaysRemote: return {Target::Remote, "always-remote"};
    case PolicyKind::AllOf: {
      std::string reasons;
      for (const auto& child : policy.children) {
        OffloadDecision d = decide(child, s);
        if (d.target == Target::Local) return d;
        reasons += (reasons.empty() ? "" : " and ") + d.reason;
      }
      return {Target::Remote, reasons};
    }
    case PolicyKind::AnyOf: {
      std::string reasons;
      for (const auto& child : policy.children) {
        OffloadDecision d = decide(child, s);
        if (d.target == Target::Remote) return d;
        reasons += (reasons.empty() ? "" : " and ") + d.reason;
      }
      return {Target::Local, reasons};
    }
  }
  return {Target::Local, "unknown policy"};
}

}  // namespace edgeflow
