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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wms::accounting {

namespace fs = std::filesystem;

enum class AccountKind { User, Group, Resource };

struct Account {
  std::string id;
  AccountKind kind = AccountKind::User;
  std::int64_t initial = 0;
  std::int64_t balance = 0;
};

struct LedgerEntry {
  std::string entryId;
  std::string kind;  // Transfer | Charge | Deficit
  std::optional<std::string> jobId;
  std::optional<int> attempt;
  std::string from;
  std::string to;
  std::int64_t amount = 0;
  std::optional<double> cpuSeconds;
  std::optional<std::int64_t> pricePerCpuSecond;
  std::int64_t ts = 0;
  std::string memo;
};

/// ceiling(cpuSeconds * price), at least 1.
std::int64_t jobCost(double cpuSeconds, std::int64_t pricePerCpuSecond);

/// `[ alice = [ Kind = "User"; Balance = 100; ]; ... ]`
std::map<std::string, Account> loadAccounts(const fs::path& accountsFile);

/// Initial funding folded with every entry of a ledger file.
std::map<std::string, Account> replay(const std::map<std::string, Account>& initial, const fs::path& ledgerFile);

/// Double-entry credit ledger. The ledger file is the only mutable state;
/// writers from any process serialize on an flock of the file and re-read
/// it before deciding, so balances never go negative.
class Ledger {
 public:
  Ledger(const fs::path& accountsFile, fs::path ledgerFile);

  /// Throws Error(InvalidAmount), Error(UnknownAccount), Error(InsufficientCredits).
  std::string transfer(const std::string& from, const std::string& to, std::int64_t amount, const std::string& memo);

  /// Debits the user and credits `ownerGroup`. Idempotent per (jobId, attempt);
  /// a repeated call returns the first entry id. An unaffordable charge is
  /// recorded as a zero-amount Deficit entry instead of failing.
  std::string chargeJob(const std::string& jobId, int attempt, const std::string& userAccount,
                        const std::string& ownerGroup, std::int64_t pricePerCpuSecond, double cpuSeconds);

  /// Throws Error(UnknownAccount).
  std::int64_t balance(const std::string& accountId) const;
  std::vector<LedgerEntry> statement(const std::string& accountId) const;
  std::vector<LedgerEntry> entries() const;
  std::map<std::string, Account> accounts() const;
  std::int64_t totalCredits() const;

  const fs::path& ledgerFile() const { return ledgerFile_; }

 private:
  void requireAccount(const std::string& id) const;
  void append(const LedgerEntry& e);

  std::map<std::string, Account> initial_;
  fs::path ledgerFile_;
};

}  // namespace wms::accounting
