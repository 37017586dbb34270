#include <gtest/gtest.h>

#include "support.hpp"

using namespace dacc;
using namespace dacc::provenance;
using namespace testsupport;

namespace {

DataModel customer_model()
{
    return DataModel::from_json(nlohmann::json::parse(R"({
      "composites": [
        {"name": "Address", "fields": [{"name": "street", "type": "text"}, {"name": "zip", "type": "number"}]},
        {"name": "Person", "fields": [{"name": "name", "type": "text"}, {"name": "email", "type": "text"},
                                     {"name": "birth", "type": "date"}, {"name": "home", "type": "Address"}]}
      ],
      "instantiations": [{"name": "customer", "type": "Person"}]
    })"));
}

Address addr(std::string_view seed) { return crypto::KeyPair::from_seed(seed).address(); }

Hash32 tx(std::string_view seed) { return crypto::sha3_256(seed); }

} // namespace

TEST(DataModel, LeafPathsAndResolution)
{
    auto m = customer_model();
    std::vector<std::string> expected{"customer.name", "customer.email", "customer.birth", "customer.home.street",
                                      "customer.home.zip"};
    EXPECT_EQ(m.leaf_paths(), expected);
    EXPECT_EQ(m.resolve("customer.birth"), PrimitiveKind::date);
    EXPECT_THROW(m.resolve("customer.home"), UnknownPath);
    EXPECT_THROW(m.resolve("customer.phone"), UnknownPath);
    EXPECT_THROW(m.resolve("customer.name.first"), UnknownPath);
}

TEST(DataModel, CanonicalValues)
{
    auto m = customer_model();
    EXPECT_EQ(m.canonical({"customer.home.zip", "01234"}).value, "1234");
    EXPECT_EQ(m.canonical({"customer.home.zip", "1.50"}).value, "1.5");
    EXPECT_THROW(m.canonical({"customer.home.zip", "12a"}), InvalidValue);
    EXPECT_THROW(m.canonical({"customer.birth", "2023-02-29"}), InvalidValue);
    EXPECT_NO_THROW(m.canonical({"customer.birth", "2024-02-29"}));
    EXPECT_EQ(commit(m, {"customer.home.zip", "01234"}, nonce_from("c")),
              commit(m, {"customer.home.zip", "1234"}, nonce_from("c")));
}

TEST(DataModel, RejectsMalformedModels)
{
    EXPECT_THROW(DataModel::from_json(nlohmann::json::parse(
                     R"({"primitives": {"date": "date"}, "instantiations": []})")),
                 ModelError);
    EXPECT_THROW(DataModel::from_json(nlohmann::json::parse(
                     R"({"instantiations": [{"name": "x", "type": "Nowhere"}]})")),
                 ModelError);
    EXPECT_THROW(DataModel::from_json(nlohmann::json::parse(R"({"composites": []})")), ModelError);
    EXPECT_EQ(DataModel::from_json(customer_model().to_json()).leaf_paths(), customer_model().leaf_paths());
}

TEST(Commitment, MatchesIndependentOracle)
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto n = random_nonce(rng);
        DataInstance d{"customer.email", "user" + std::to_string(rng() % 1000) + "@example.org"};
        auto ref = commit(d, n);
        auto inst = keccak::sha3_256(keccak::salted_encoding({d.path}, n));
        auto val = keccak::sha3_256(keccak::salted_encoding({d.path, d.value}, n));
        ASSERT_TRUE(std::equal(inst.begin(), inst.end(), ref.instantiation.bytes.begin()));
        ASSERT_TRUE(std::equal(val.begin(), val.end(), ref.value.bytes.begin()));
    }
}

TEST(Commitment, EncodesToSixtyFourBytes)
{
    auto ref = commit({"customer.email", "a@b.c"}, nonce_from("e"));
    auto bytes = ref.encode();
    EXPECT_EQ(bytes.size(), DataReference::encoded_size);
    ByteReader r(bytes);
    EXPECT_EQ(DataReference::decode(r), ref);
}

TEST(Commitment, BindingAndHiding)
{
    auto n = nonce_from("bind");
    DataInstance d{"customer.email", "a@b.c"};
    auto ref = commit(d, n);
    EXPECT_TRUE(verify_commitment(d, n, ref));
    EXPECT_FALSE(verify_commitment({"customer.email", "a@b.d"}, n, ref));
    EXPECT_FALSE(verify_commitment({"customer.name", "a@b.c"}, n, ref));
    EXPECT_FALSE(verify_commitment(d, nonce_from("other"), ref));
    // same value under different nonces gives unrelated digests
    auto other = commit(d, nonce_from("bind2"));
    EXPECT_NE(other.instantiation, ref.instantiation);
    EXPECT_NE(other.value, ref.value);
}

TEST(Graph, RecordsControllerAndProcessorTrail)
{
    ProvenanceGraph g("alice");
    auto n1 = nonce_from("n1"), n2 = nonce_from("n2");
    std::vector<DataInstance> data{{"customer.email", "alice@example.org"}, {"customer.name", "Alice"}};
    g.record_transfer(addr("acme"), RecipientRole::controller, addr("c1"), n1, data, tx("t1"));
    g.record_transfer(addr("mailer"), RecipientRole::processor, addr("c2"), n2, {data[0]}, tx("t2"), addr("acme"));

    auto trail = g.audit_trail("customer.email");
    ASSERT_EQ(trail.size(), 2u);
    EXPECT_EQ(trail[0].recipient, addr("acme"));
    EXPECT_EQ(trail[0].role, RecipientRole::controller);
    EXPECT_EQ(trail[1].recipient, addr("mailer"));
    EXPECT_EQ(trail[1].via, addr("acme"));
    EXPECT_EQ(g.audit_trail("customer.name").size(), 1u);
    EXPECT_TRUE(g.audit_trail("customer.birth").empty());
    EXPECT_TRUE(g.consistent());
}

TEST(Graph, ProcessorNeedsKnownParent)
{
    ProvenanceGraph g("alice");
    auto n = nonce_from("n");
    EXPECT_THROW(g.record_transfer(addr("mailer"), RecipientRole::processor, addr("c"), n, {}, tx("t")), GraphError);
    EXPECT_THROW(g.record_transfer(addr("mailer"), RecipientRole::processor, addr("c"), n, {}, tx("t"), addr("acme")),
                 GraphError);
    EXPECT_THROW(g.record_transfer(addr("acme"), RecipientRole::controller, addr("c"), n, {}, tx("t"), addr("x")),
                 GraphError);
}

TEST(Graph, RegrantIsIdempotent)
{
    ProvenanceGraph g("alice");
    auto n = nonce_from("n");
    DataInstance d{"customer.email", "alice@example.org"};
    g.record_transfer(addr("acme"), RecipientRole::controller, addr("c"), n, {d}, tx("t1"));
    auto before = g;
    g.record_transfer(addr("acme"), RecipientRole::controller, addr("c"), n, {d}, tx("t2"));
    EXPECT_EQ(g, before);
    g.record_transfer(addr("acme"), RecipientRole::controller, addr("c"), n, {{"customer.email", "new@example.org"}},
                      tx("t3"));
    EXPECT_EQ(g.entry(addr("acme"))->grants.size(), 2u);
}

TEST(Graph, PersistsAndDetectsAlteredPlaintext)
{
    ProvenanceGraph g("alice");
    g.record_transfer(addr("acme"), RecipientRole::controller, addr("c"), nonce_from("n"),
                      {{"customer.email", "alice@example.org"}}, tx("t1"));
    auto path = (std::filesystem::temp_directory_path() / "dacc-graph-test.json").string();
    g.save(path);
    EXPECT_EQ(ProvenanceGraph::load(path), g);

    auto j = g.to_json();
    j["entries"][0]["grants"][0]["value"] = "mallory@example.org";
    EXPECT_THROW(ProvenanceGraph::from_json(j), GraphError);
    std::filesystem::remove(path);
}

// Property: no collision among many commitments to distinct (path, value)
// pairs under one nonce, and the same pair under distinct nonces.
TEST(ProvenanceProperties, NoCollisions)
{
    std::mt19937_64 rng(13);
    std::set<Hash32> values, instantiations;
    auto n = random_nonce(rng);
    for (int i = 0; i < 2000; ++i) {
        auto ref = commit({"p" + std::to_string(i % 50), "v" + std::to_string(i)}, n);
        EXPECT_TRUE(values.insert(ref.value).second);
        instantiations.insert(ref.instantiation);
    }
    EXPECT_EQ(instantiations.size(), 50u);
    std::set<Hash32> salted;
    for (int i = 0; i < 2000; ++i) EXPECT_TRUE(salted.insert(commit({"p", "v"}, random_nonce(rng)).value).second);
}
