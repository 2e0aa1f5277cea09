#include "tp/reports.hpp"

#include <algorithm>

#include "json.hpp"

namespace tp {

DeadlockReport DeadlockReport::canonical() const {
  if (cycle.size() <= 1) return *this;
  std::size_t best = 0;
  for (std::size_t i = 1; i < cycle.size(); ++i) {
    if (cycle[i].task < cycle[best].task) best = i;
  }
  DeadlockReport out;
  out.cycle.reserve(cycle.size());
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    out.cycle.push_back(cycle[(best + i) % cycle.size()]);
  }
  return out;
}

Alarm Alarm::make_deadlock(DeadlockReport r) {
  Alarm a;
  a.kind = Kind::deadlock;
  a.deadlock = std::move(r);
  return a;
}

Alarm Alarm::make_omitted(std::shared_ptr<const OmittedSetReport> r) {
  Alarm a;
  a.kind = Kind::omitted_set;
  a.omitted = std::move(r);
  return a;
}

std::string Alarm::json_line() const {
  nlohmann::json j;
  if (kind == Kind::deadlock) {
    j["kind"] = "deadlock";
    auto canon = deadlock.canonical();
    auto& arr = j["cycle"] = nlohmann::json::array();
    for (const auto& [t, p] : canon.cycle) {
      arr.push_back({{"task", t}, {"promise", p}});
    }
  } else {
    j["kind"] = "omitted_set";
    j["task"] = omitted->task;
    j["promises"] = omitted->promises;
    j["exceptional_exit"] = omitted->exceptional_exit;
  }
  return j.dump();
}

void AlarmRegistry::push(Alarm a) {
  std::lock_guard<std::mutex> lk(mu_);
  alarms_.push_back(std::move(a));
}

std::vector<Alarm> AlarmRegistry::drain() {
  std::lock_guard<std::mutex> lk(mu_);
  std::vector<Alarm> out;
  out.swap(alarms_);
  return out;
}

std::vector<Alarm> AlarmRegistry::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return alarms_;
}

std::size_t AlarmRegistry::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return alarms_.size();
}

AlarmRegistry& alarm_registry() {
  static AlarmRegistry reg;
  return reg;
}

}  // namespace tp
