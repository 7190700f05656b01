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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "wms/accounting/ledger.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"

using namespace wms;
using namespace wms::accounting;
namespace fs = std::filesystem;

namespace {

struct TempLedger {
  fs::path dir = fs::temp_directory_path() / ("wms-acct-" + util::randomHex(6));
  fs::path accounts = dir / "accounts.ad";
  std::unique_ptr<Ledger> ledger;
  explicit TempLedger(const std::string& text = R"([ grp = [ Kind = "Group"; Balance = 100; ];
      u1 = [ Kind = "User"; Balance = 0; ]; u2 = [ Kind = "User"; Balance = 50; ];
      site = [ Kind = "Resource"; Balance = 0; ]; ])") {
    fs::create_directories(dir);
    util::writeFileAtomic(accounts, text);
    ledger = std::make_unique<Ledger>(accounts, dir / "accounting" / "ledger.log");
  }
  ~TempLedger() { fs::remove_all(dir); }
};

Errc codeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::BadRequest;
}

}  // namespace

TEST(Accounting, CostRule) {
  EXPECT_EQ(jobCost(3.2, 2), 7);
  EXPECT_EQ(jobCost(0.1, 1), 1);
  EXPECT_EQ(jobCost(3.0, 2), 6);
  EXPECT_EQ(jobCost(0.0, 5), 1);
}

TEST(Accounting, LoadsFixtureAccounts) {
  auto a = loadAccounts(WMS_FIXTURE_DIR "/accounts.ad");
  EXPECT_EQ(a.at("alice").kind, AccountKind::User);
  EXPECT_EQ(a.at("physics").kind, AccountKind::Group);
  EXPECT_TRUE(a.count("site_alpha"));
}

TEST(Accounting, Transfers) {
  TempLedger t;
  t.ledger->transfer("grp", "u1", 40, "allocation");
  EXPECT_EQ(t.ledger->balance("grp"), 60);
  EXPECT_EQ(t.ledger->balance("u1"), 40);
  EXPECT_EQ(t.ledger->entries().size(), 1u);
  EXPECT_EQ(codeOf([&] { t.ledger->transfer("grp", "u1", 200, ""); }), Errc::InsufficientCredits);
  EXPECT_EQ(t.ledger->balance("grp"), 60);
  EXPECT_EQ(codeOf([&] { t.ledger->transfer("grp", "u1", 0, ""); }), Errc::InvalidAmount);
  EXPECT_EQ(codeOf([&] { t.ledger->transfer("grp", "nobody", 1, ""); }), Errc::UnknownAccount);
  EXPECT_EQ(codeOf([&] { t.ledger->balance("nobody"); }), Errc::UnknownAccount);
}

TEST(Accounting, ChargeIsIdempotentPerAttempt) {
  TempLedger t;
  auto id1 = t.ledger->chargeJob("j1", 1, "u2", "site", 2, 3.2);
  auto id2 = t.ledger->chargeJob("j1", 1, "u2", "site", 2, 3.2);
  EXPECT_EQ(id1, id2);
  EXPECT_EQ(t.ledger->balance("u2"), 43);
  EXPECT_EQ(t.ledger->balance("site"), 7);
  t.ledger->chargeJob("j1", 2, "u2", "site", 2, 3.2);
  EXPECT_EQ(t.ledger->balance("u2"), 36);
}

TEST(Accounting, UnaffordableChargeRecordsDeficit) {
  TempLedger t;
  t.ledger->chargeJob("j9", 1, "u1", "site", 5, 10);
  auto st = t.ledger->statement("u1");
  ASSERT_EQ(st.size(), 1u);
  EXPECT_EQ(st[0].kind, "Deficit");
  EXPECT_EQ(st[0].amount, 0);
  EXPECT_EQ(t.ledger->balance("u1"), 0);
  // Still idempotent after a deficit.
  t.ledger->chargeJob("j9", 1, "u1", "site", 5, 10);
  EXPECT_EQ(t.ledger->statement("u1").size(), 1u);
}

TEST(Accounting, StatementFoldReproducesBalance) {
  TempLedger t;
  t.ledger->transfer("grp", "u1", 30, "");
  t.ledger->chargeJob("a", 1, "u1", "site", 1, 4.5);
  t.ledger->transfer("u2", "u1", 5, "");
  auto accts = t.ledger->accounts();
  for (const auto& [id, a] : accts) {
    std::int64_t b = a.initial;
    for (const auto& e : t.ledger->statement(id)) {
      if (e.from == id) b -= e.amount;
      if (e.to == id) b += e.amount;
    }
    EXPECT_EQ(b, a.balance) << id;
  }
}

TEST(Accounting, ConservationUnderRandomOperations) {
  TempLedger t;
  const std::int64_t total = t.ledger->totalCredits();
  std::mt19937 rng(42);
  const char* ids[] = {"grp", "u1", "u2", "site"};
  for (int i = 0; i < 300; ++i) {
    try {
      if (rng() % 2) {
        t.ledger->transfer(ids[rng() % 4], ids[rng() % 4], static_cast<std::int64_t>(rng() % 60) - 5, "");
      } else {
        t.ledger->chargeJob("job" + std::to_string(rng() % 40), 1 + static_cast<int>(rng() % 2), ids[rng() % 4], "site",
                            1 + rng() % 3, (rng() % 100) / 10.0);
      }
    } catch (const Error&) {
    }
    ASSERT_EQ(t.ledger->totalCredits(), total);
  }
  for (const auto& [id, a] : t.ledger->accounts()) EXPECT_GE(a.balance, 0) << id;
  auto replayed = replay(loadAccounts(t.accounts), t.ledger->ledgerFile());
  for (const auto& [id, a] : t.ledger->accounts()) EXPECT_EQ(replayed.at(id).balance, a.balance);
}

TEST(Accounting, ConcurrentWritersNeverOverdraw) {
  TempLedger t;
  std::vector<std::thread> th;
  for (int i = 0; i < 4; ++i)
    th.emplace_back([&] {
      Ledger mine(t.accounts, t.ledger->ledgerFile());
      for (int k = 0; k < 20; ++k) {
        try {
          mine.transfer("grp", "u1", 3, "");
        } catch (const Error&) {
        }
      }
    });
  for (auto& x : th) x.join();
  EXPECT_EQ(t.ledger->balance("grp"), 100 - 3 * 33);
  EXPECT_EQ(t.ledger->balance("u1"), 99);
}
