#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "shardmemo/scope.hpp"

using namespace shardmemo;
using testutil::key;

TEST_CASE("tenant constraint") {
  const auto pred = ScopePredicate::tenant_wide("T1");
  CHECK(scope_eval(pred, key("T1", "a")));
  CHECK_FALSE(scope_eval(pred, key("T2", "a")));
}

TEST_CASE("required permissions must all be present") {
  auto pred = ScopePredicate::tenant_wide("T1");
  pred.required_permissions = {"p1", "p2"};
  CHECK_FALSE(scope_eval(pred, key("T1", "a", std::nullopt, std::nullopt, {"p1"})));
  CHECK(scope_eval(pred, key("T1", "a", std::nullopt, std::nullopt, {"p1", "p2", "p3"})));
}

TEST_CASE("agent-level metadata is not restricted by session or domain constraints") {
  auto pred = ScopePredicate::tenant_wide("T1");
  pred.allowed_sessions = Allowed<std::string>::of({"s1"});
  pred.allowed_domains = Allowed<std::string>::of({"d1"});
  CHECK(scope_eval(pred, key("T1", "a")));
  CHECK(scope_eval(pred, key("T1", "a", "s1")));
  CHECK_FALSE(scope_eval(pred, key("T1", "a", "s2")));
  CHECK_FALSE(scope_eval(pred, key("T1", "a", std::nullopt, "d2")));
}

TEST_CASE("family constraint is vacuous without a family") {
  auto pred = ScopePredicate::tenant_wide("T1");
  pred.allowed_families = Allowed<Family>::of({Family::Profile});
  CHECK(scope_eval(pred, key("T1", "a")));
  CHECK(scope_eval(pred, key("T1", "a"), Family::Profile));
  CHECK_FALSE(scope_eval(pred, key("T1", "a"), Family::Session));
}

TEST_CASE("exhaustive small-universe agreement with a set-based oracle") {
  const std::vector<std::string> tenants{"T1", "T2"};
  const std::vector<std::string> agents{"a", "b"};
  const std::vector<std::optional<std::string>> sessions{std::nullopt, "s1", "s2"};
  const std::vector<std::optional<std::string>> domains{std::nullopt, "d1"};
  const std::vector<std::set<std::string>> perm_sets{{}, {"p1"}, {"p2"}, {"p1", "p2"}};
  const std::vector<std::optional<std::set<std::string>>> agent_sets{std::nullopt, std::set<std::string>{},
                                                                     std::set<std::string>{"a"},
                                                                     std::set<std::string>{"a", "b"}};
  const std::vector<std::optional<std::set<std::string>>> session_sets{std::nullopt, std::set<std::string>{"s1"}};
  const std::vector<std::optional<std::set<std::string>>> domain_sets{std::nullopt, std::set<std::string>{"d1"},
                                                                      std::set<std::string>{}};
  const std::vector<std::optional<std::set<Family>>> family_sets{std::nullopt, std::set<Family>{Family::Profile},
                                                                 std::set<Family>{Family::Session, Family::Observation}};
  const std::vector<Family> families{Family::Profile, Family::Observation, Family::Session};

  auto in = [](const auto& opt, const auto& v) { return !opt || opt->count(v) > 0; };
  std::size_t cases = 0, admitted = 0;
  for (const auto& agents_allowed : agent_sets)
    for (const auto& sessions_allowed : session_sets)
      for (const auto& domains_allowed : domain_sets)
        for (const auto& fams_allowed : family_sets)
          for (const auto& required : perm_sets) {
            ScopePredicate pred = ScopePredicate::tenant_wide("T1");
            if (agents_allowed) pred.allowed_agents = Allowed<std::string>::of(*agents_allowed);
            if (sessions_allowed) pred.allowed_sessions = Allowed<std::string>::of(*sessions_allowed);
            if (domains_allowed) pred.allowed_domains = Allowed<std::string>::of(*domains_allowed);
            if (fams_allowed) pred.allowed_families = Allowed<Family>::of(*fams_allowed);
            pred.required_permissions = required;
            for (const auto& t : tenants)
              for (const auto& a : agents)
                for (const auto& s : sessions)
                  for (const auto& d : domains)
                    for (const auto& tags : perm_sets)
                      for (Family f : families) {
                        const ScopeKey k = key(t, a, s, d, tags);
                        const bool expected = t == "T1" && in(agents_allowed, a) &&
                                              (!s || in(sessions_allowed, *s)) && (!d || in(domains_allowed, *d)) &&
                                              std::includes(tags.begin(), tags.end(), required.begin(), required.end()) &&
                                              in(fams_allowed, f);
                        CHECK(scope_eval(pred, k, f) == expected);
                        ++cases;
                        admitted += expected;
                      }
          }
  CHECK(cases > 10000);
  CHECK(admitted > 0);
}
