/***************************************************************
 *
 * Copyright (C) 2026, The gridwms Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you
 * may not use this file except in compliance with the License.  You may
 * obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 ***************************************************************/

#include "wms/accounting/ledger.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "wms/classad/classad.hpp"
#include "wms/classad/eval.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

namespace wms::accounting {

namespace {

std::string toLine(const LedgerEntry& e) {
  nlohmann::ordered_json j;
  j["entryId"] = e.entryId;
  j["kind"] = e.kind;
  if (e.jobId) j["jobId"] = *e.jobId;
  if (e.attempt) j["attempt"] = *e.attempt;
  j["from"] = e.from;
  j["to"] = e.to;
  j["amount"] = e.amount;
  if (e.cpuSeconds) j["cpuSeconds"] = *e.cpuSeconds;
  if (e.pricePerCpuSecond) j["pricePerCpuSecond"] = *e.pricePerCpuSecond;
  j["ts"] = e.ts;
  j["memo"] = e.memo;
  return j.dump() + "\n";
}

std::optional<LedgerEntry> fromLine(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    LedgerEntry e;
    e.entryId = j.at("entryId").get<std::string>();
    e.kind = j.at("kind").get<std::string>();
    if (j.contains("jobId")) e.jobId = j["jobId"].get<std::string>();
    if (j.contains("attempt")) e.attempt = j["attempt"].get<int>();
    e.from = j.at("from").get<std::string>();
    e.to = j.at("to").get<std::string>();
    e.amount = j.at("amount").get<std::int64_t>();
    if (j.contains("cpuSeconds")) e.cpuSeconds = j["cpuSeconds"].get<double>();
    if (j.contains("pricePerCpuSecond")) e.pricePerCpuSecond = j["pricePerCpuSecond"].get<std::int64_t>();
    e.ts = j.value("ts", std::int64_t{0});
    e.memo = j.value("memo", std::string());
    return e;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<LedgerEntry> readEntries(const fs::path& file) {
  std::vector<LedgerEntry> out;
  if (!fs::exists(file)) return out;
  std::string text = util::readFile(file);
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail never counts
    if (auto e = fromLine(std::string_view(text).substr(pos, nl - pos))) out.push_back(std::move(*e));
    pos = nl + 1;
  }
  return out;
}

std::map<std::string, Account> fold(std::map<std::string, Account> accounts, const std::vector<LedgerEntry>& entries) {
  for (const auto& e : entries) {
    auto f = accounts.find(e.from);
    auto t = accounts.find(e.to);
    if (f == accounts.end() || t == accounts.end()) continue;
    f->second.balance -= e.amount;
    t->second.balance += e.amount;
  }
  return accounts;
}

}  // namespace

std::int64_t jobCost(double cpuSeconds, std::int64_t price) {
  // The small epsilon keeps exact products (e.g. 3.0 * 2) from rounding up
  // through floating-point noise.
  double raw = std::max(0.0, cpuSeconds) * static_cast<double>(price);
  auto cost = static_cast<std::int64_t>(std::ceil(raw - 1e-9));
  return std::max<std::int64_t>(1, cost);
}

std::map<std::string, Account> loadAccounts(const fs::path& accountsFile) {
  auto ad = classad::parseAd(util::readFile(accountsFile));
  std::map<std::string, Account> out;
  for (const auto& entry : ad.entries()) {
    const auto* nested = std::get_if<classad::AdExpr>(&entry.expr->node);
    if (!nested) throw Error(Errc::InvalidAd, "account '" + entry.name + "' must be a nested ad");
    classad::MatchContext ctx(*nested->ad);
    auto kind = classad::evaluateAttr("Kind", ctx);
    auto bal = classad::evaluateAttr("Balance", ctx);
    Account a;
    a.id = entry.name;
    if (!kind.isString()) throw Error(Errc::InvalidAd, "account '" + a.id + "' needs Kind");
    if (util::iequals(kind.asString(), "user")) a.kind = AccountKind::User;
    else if (util::iequals(kind.asString(), "group")) a.kind = AccountKind::Group;
    else if (util::iequals(kind.asString(), "resource")) a.kind = AccountKind::Resource;
    else throw Error(Errc::InvalidAd, "account '" + a.id + "' has unknown Kind");
    if (!bal.isInteger() || bal.asInteger() < 0)
      throw Error(Errc::InvalidAd, "account '" + a.id + "' needs a non-negative integer Balance");
    a.initial = a.balance = bal.asInteger();
    out.emplace(a.id, a);
  }
  return out;
}

std::map<std::string, Account> replay(const std::map<std::string, Account>& initial, const fs::path& ledgerFile) {
  return fold(initial, readEntries(ledgerFile));
}

Ledger::Ledger(const fs::path& accountsFile, fs::path ledgerFile)
    : initial_(loadAccounts(accountsFile)), ledgerFile_(std::move(ledgerFile)) {
  std::error_code ec;
  fs::create_directories(ledgerFile_.parent_path(), ec);
}

void Ledger::requireAccount(const std::string& id) const {
  if (!initial_.count(id)) throw Error(Errc::UnknownAccount, "unknown account '" + id + "'");
}

void Ledger::append(const LedgerEntry& e) { util::appendDurable(ledgerFile_, toLine(e)); }

std::string Ledger::transfer(const std::string& from, const std::string& to, std::int64_t amount,
                             const std::string& memo) {
  if (amount <= 0) throw Error(Errc::InvalidAmount, "transfer amount must be positive");
  requireAccount(from);
  requireAccount(to);
  util::FileLock lock(ledgerFile_, true);
  auto entries = readEntries(ledgerFile_);
  auto balances = fold(initial_, entries);
  if (balances.at(from).balance < amount)
    throw Error(Errc::InsufficientCredits, "account '" + from + "' has " + std::to_string(balances.at(from).balance) +
                                               " credits, needs " + std::to_string(amount));
  LedgerEntry e;
  char id[32];
  std::snprintf(id, sizeof id, "e%08zu", entries.size() + 1);
  e.entryId = id;
  e.kind = "Transfer";
  e.from = from;
  e.to = to;
  e.amount = amount;
  e.ts = util::nowMs();
  e.memo = memo;
  append(e);
  return e.entryId;
}

std::string Ledger::chargeJob(const std::string& jobId, int attempt, const std::string& userAccount,
                              const std::string& ownerGroup, std::int64_t price, double cpuSeconds) {
  requireAccount(userAccount);
  requireAccount(ownerGroup);
  util::FileLock lock(ledgerFile_, true);
  auto entries = readEntries(ledgerFile_);
  for (const auto& e : entries)
    if (e.jobId == jobId && e.attempt == attempt && (e.kind == "Charge" || e.kind == "Deficit")) return e.entryId;
  auto balances = fold(initial_, entries);
  std::int64_t cost = jobCost(cpuSeconds, price);
  LedgerEntry e;
  char id[32];
  std::snprintf(id, sizeof id, "e%08zu", entries.size() + 1);
  e.entryId = id;
  e.jobId = jobId;
  e.attempt = attempt;
  e.from = userAccount;
  e.to = ownerGroup;
  e.cpuSeconds = cpuSeconds;
  e.pricePerCpuSecond = price;
  e.ts = util::nowMs();
  if (balances.at(userAccount).balance >= cost) {
    e.kind = "Charge";
    e.amount = cost;
    e.memo = "job " + jobId + " attempt " + std::to_string(attempt);
  } else {
    e.kind = "Deficit";
    e.amount = 0;
    e.memo = "insufficient credits: cost " + std::to_string(cost) + ", balance " +
             std::to_string(balances.at(userAccount).balance);
  }
  append(e);
  return e.entryId;
}

std::vector<LedgerEntry> Ledger::entries() const { return readEntries(ledgerFile_); }

std::map<std::string, Account> Ledger::accounts() const { return fold(initial_, entries()); }

std::int64_t Ledger::balance(const std::string& accountId) const {
  requireAccount(accountId);
  return accounts().at(accountId).balance;
}

std::vector<LedgerEntry> Ledger::statement(const std::string& accountId) const {
  requireAccount(accountId);
  std::vector<LedgerEntry> out;
  for (auto& e : entries())
    if (e.from == accountId || e.to == accountId) out.push_back(std::move(e));
  std::stable_sort(out.begin(), out.end(), [](const LedgerEntry& a, const LedgerEntry& b) { return a.ts < b.ts; });
  return out;
}

std::int64_t Ledger::totalCredits() const {
  std::int64_t sum = 0;
  for (const auto& [id, a] : accounts()) sum += a.balance;
  return sum;
}

}  // namespace wms::accounting
