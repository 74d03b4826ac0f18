// Copyright 2026 The Joint Auction Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <set>
#include <sstream>

#include "jal/datagen.hpp"
#include "jal/errors.hpp"

using namespace jal;

TEST_CASE("random-count CTR tables") {
  CHECK(random_count_slots(4).ctrs() == std::vector<double>{0.7, 0.6, 0.5, 0.4});
  CHECK(random_count_slots(5).ctrs() == std::vector<double>{0.7, 0.6, 0.5, 0.4, 0.3});
  CHECK(random_count_slots(6).ctrs() ==
        std::vector<double>{0.7, 0.6, 0.5, 0.4, 0.3, 0.2});
  CHECK_THROWS_AS(random_count_slots(3), ConfigError);
}

TEST_CASE("random-count instances respect the count rules") {
  auto spec = random_count_setting(4);
  std::set<std::size_t> seen;
  const std::size_t n = 100000;
  for (std::size_t s = 0; s < n; ++s) {
    AuctionInstance inst = generate_one(spec, 9, s);
    const std::size_t m = inst.num_ads();
    REQUIRE(m >= 3);
    REQUIRE(m <= 10);
    REQUIRE(inst.num_items() == 20);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& a : inst.advertisers) ++counts[static_cast<int>(a.kind)];
    REQUIRE(counts[0] >= 1);
    REQUIRE(counts[1] >= 1);
    REQUIRE(counts[2] >= 1);
    seen.insert(m);
    if (s < 2000) {
      for (const auto& a : inst.advertisers) {
        REQUIRE(matches_type(a.kind, a.value));
        REQUIRE(a.value.store <= 1.0);
        REQUIRE(a.value.brand <= 1.0);
        REQUIRE(a.ue >= 0.0);
        REQUIRE(a.ue <= 0.5);
      }
      for (const auto& o : inst.organics) {
        REQUIRE(o.ue >= 0.5);
        REQUIRE(o.ue <= 1.0);
      }
    }
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("fixed settings") {
  auto a = gen_fixed('A', Uniform{}, 50, 3);
  for (const auto& inst : a.instances) {
    CHECK(inst.num_ads() == 4);
    CHECK(inst.num_organics() == 6);
    CHECK(inst.slots.ctrs() == std::vector<double>{0.5, 0.3, 0.2});
    CHECK_NOTHROW(inst.validate(a.context_dim));
    for (const auto& ad : inst.advertisers) CHECK(matches_type(ad.kind, ad.value));
  }
  auto b = gen_fixed('B', Uniform{}, 3, 3);
  CHECK(b.instances[0].num_ads() == 5);
  CHECK(b.instances[0].num_organics() == 5);
  auto c = gen_fixed('C', Uniform{}, 3, 3);
  CHECK(c.instances[0].num_ads() == 6);
  CHECK(c.instances[0].num_organics() == 4);
  CHECK(c.instances[0].num_slots() == 3);
  CHECK_THROWS_AS(gen_fixed('D', Uniform{}, 3, 3), ConfigError);
}

TEST_CASE("generation is deterministic to the byte") {
  std::ostringstream x, y, z;
  write_jsonl(gen_fixed('A', Uniform{}, 200, 42), x);
  write_jsonl(gen_fixed('A', Uniform{}, 200, 42), y);
  write_jsonl(gen_fixed('A', Uniform{}, 200, 43), z);
  CHECK(x.str() == y.str());
  CHECK(x.str() != z.str());
}

TEST_CASE("contexts carry the type one-hot") {
  auto data = gen_fixed('B', Uniform{}, 20, 5);
  const std::size_t c = ContextConfig{}.continuous_dims;
  for (const auto& inst : data.instances) {
    for (const auto& a : inst.advertisers)
      CHECK(a.context[c + static_cast<int>(a.kind)] == 1.0);
    for (const auto& o : inst.organics) CHECK(o.context[c + 3] == 1.0);
  }
}

TEST_CASE("json lines round trip") {
  auto data = gen_fixed('C', TruncatedNormal{}, 30, 8);
  std::ostringstream out;
  write_jsonl(data, out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    AuctionInstance back = instance_from_json(line, i + 1);
    CHECK(instance_to_json(back) == instance_to_json(data.instances[i]));
    ++i;
  }
  CHECK(i == 30);
}

namespace {

std::string log_line(int ads, int organics, int id) {
  std::ostringstream os;
  os << R"({"request_id":")" << id << R"(","timestamp":1700000000,"slots":[0.7,0.6,0.5,0.4,0.3],"ads":[)";
  for (int i = 0; i < ads; ++i)
    os << (i ? "," : "") << R"({"type":"joint","value":[)" << 0.01 * (i + 1) << ","
       << 0.02 << R"(],"ue":0.2,"ctx":[0.1,0.2],"extra":true})";
  os << R"(],"organics":[)";
  for (int j = 0; j < organics; ++j)
    os << (j ? "," : "") << R"({"ue":)" << 0.5 + 0.01 * j << R"(,"ctx":[0.3,0.4]})";
  os << "]}";
  return os.str();
}

}  // namespace

TEST_CASE("ingest_logs truncates and prunes") {
  std::istringstream in(log_line(12, 15, 1) + "\n" + log_line(1, 1, 2) + "\n");
  IngestOptions opts;
  opts.target_slots = 4;
  opts.max_ads = 10;
  opts.max_organics = 10;
  IngestResult r = ingest_logs(in, opts);
  REQUIRE(r.data.size() == 1);
  CHECK(r.dropped == 1);
  CHECK(r.warnings.size() == 1);
  const auto& inst = r.data.instances[0];
  CHECK(inst.num_ads() == 10);
  CHECK(inst.num_organics() == 10);
  CHECK(inst.num_slots() == 4);
  // Highest total bids survive, in descending order.
  CHECK(inst.advertisers.front().value.store == doctest::Approx(0.12));
  CHECK(inst.advertisers.back().value.store == doctest::Approx(0.03));
  CHECK(inst.organics.front().ue == doctest::Approx(0.64));
}

TEST_CASE("ingest_logs errors") {
  IngestOptions opts;
  {
    std::istringstream in(log_line(2, 3, 1) + "\n{not json\n");
    try {
      ingest_logs(in, opts);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  {
    std::istringstream in(
        R"({"request_id":"x","slots":[0.5,0.4,0.3,0.2],"ads":[],"organics":[{"ctx":[0.1]},{"ue":0.4,"ctx":[0.1]}]})");
    try {
      ingest_logs(in, opts);
      FAIL("expected a schema error");
    } catch (const SchemaError& e) {
      CHECK(e.field() == "ue");
    }
  }
  {
    std::istringstream in(R"({"slots":[0.5],"ads":[],"organics":[]})");
    CHECK_THROWS_AS(ingest_logs(in, opts), SchemaError);
  }
}
