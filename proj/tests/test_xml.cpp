#include <catch_amalgamated.hpp>

#include <string>

#include "knart/xml.hpp"

using knart::xml::parse;
using knart::xml::resolve_path;

TEST_CASE("paths index repeated siblings and resolve back", "[xml]") {
  auto doc = parse(R"(<r xmlns="urn:a"><c/><b><c x="1"/><c x="2"/></b><c/></r>)");
  CHECK(doc.root.path == "/r");
  CHECK(doc.root.ns == "urn:a");
  const auto& b = doc.root.children[1];
  CHECK(b.path == "/r/b[1]");
  CHECK(b.children[1].path == "/r/b[1]/c[2]");
  CHECK(doc.root.children[2].path == "/r/c[2]");
  const auto* found = resolve_path(doc, "/r/b[1]/c[2]");
  REQUIRE(found);
  CHECK(*found->attribute("x") == "2");
  CHECK(resolve_path(doc, "/r/b[1]/c[3]") == nullptr);
  CHECK(resolve_path(doc, "/x") == nullptr);
  CHECK(resolve_path(doc, "r") == nullptr);
}

TEST_CASE("qualified attribute values resolve through in-scope prefixes", "[xml]") {
  auto doc = parse(R"(<r xmlns:elm="urn:hl7-org:elm:r1" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">
                        <e xsi:type="elm:And"><f xmlns:elm="urn:other" xsi:type="elm:Or"/></e></r>)");
  const auto& e = doc.root.children[0];
  CHECK(e.xsi_type() == "And");
  CHECK(e.resolve_qname("elm:And").first == "urn:hl7-org:elm:r1");
  CHECK(e.children[0].resolve_qname("elm:Or").first == "urn:other");
  CHECK(e.child("f") != nullptr);
  CHECK(e.child("g") == nullptr);
}

TEST_CASE("malformed input reports a byte offset", "[xml]") {
  for (std::string bad : {"", "<a>", "<a></b>", "not xml", "<a x='1></a>"}) {
    try {
      parse(bad);
      FAIL("accepted: " << bad);
    } catch (const knart::Error& e) {
      CHECK(e.kind() == knart::ErrorKind::MalformedXml);
      REQUIRE(e.byte_offset());
      CHECK(*e.byte_offset() <= bad.size());
    }
  }
}

TEST_CASE("nesting beyond the depth limit is rejected", "[xml]") {
  std::string deep;
  for (std::size_t i = 0; i < knart::xml::kMaxDepth + 5; ++i) deep += "<a>";
  for (std::size_t i = 0; i < knart::xml::kMaxDepth + 5; ++i) deep += "</a>";
  CHECK_THROWS_AS(parse(deep), knart::Error);
}
