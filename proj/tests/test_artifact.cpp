#include <catch_amalgamated.hpp>

#include "knart/artifact.hpp"
#include "knart/xml.hpp"
#include "support.hpp"

using namespace knart;

namespace {

std::string document(const std::string& body, const std::string& type = "Rule") {
  return R"(<knowledgeDocument xmlns="urn:hl7-org:knowledgeartifact:r1" xmlns:elm="urn:hl7-org:elm:r1" )"
         R"(xmlns:t="urn:hl7-org:elm-types:r1" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance">)"
         R"(<metadata><identifiers><identifier root="1.2" extension="T-1"/></identifiers><artifactType value=")" +
         type + R"("/></metadata>)" + body + "</knowledgeDocument>";
}

ErrorKind load_error(const std::string& text) {
  try {
    load_artifact(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("document was accepted");
  return ErrorKind::ProtocolError;
}

}  // namespace

TEST_CASE("order set header, symbols and condition are extracted", "[artifact]") {
  auto a = load_artifact(testing::fixture("os-01.xml"));
  CHECK(a.id == "OS-01");
  CHECK(a.kind == ArtifactKind::OrderSet);
  CHECK(a.title == "Heart failure admission order set");
  REQUIRE(a.conditions.size() == 1);
  CHECK(a.conditions[0].id == "cond-1");
  CHECK(a.conditions[0].raw_expression->xsi_type() == "And");
  CHECK(xml::resolve_path(*a.document, a.conditions[0].source_path) != nullptr);

  auto env = extract_symbol_env(a);
  REQUIRE(env.size() == 2);
  CHECK(env.entries()[0].name == "AdverseReactionToACEInhibitors");
  CHECK(env.entries()[0].value_type_name == "AdverseEvent");
  CHECK(env.entries()[0].cardinality == Cardinality::List);
  CHECK(env.entries()[1].name == "PatientAgeInYears");
  CHECK(env.entries()[1].value_type_name == "Integer");
  CHECK(env.entries()[1].cardinality == Cardinality::Single);
}

TEST_CASE("rule conditions keep their ids and document order", "[artifact]") {
  auto a = load_artifact(testing::fixture("two-conditions.xml"));
  CHECK(a.kind == ArtifactKind::EcaRule);
  REQUIRE(a.conditions.size() == 2);
  CHECK(a.conditions[0].id == "high");
  CHECK(a.conditions[1].id == "low");
  auto env = extract_symbol_env(a);
  CHECK(env.find("SystolicBP")->value_type_name == "Integer");
  CHECK(env.find("Hypertensive")->value_type_name == "Boolean");
}

TEST_CASE("a documentation template without conditions loads", "[artifact]") {
  auto a = load_artifact(testing::fixture("empty-conditions.xml"));
  CHECK(a.kind == ArtifactKind::DocumentationTemplate);
  CHECK(a.conditions.empty());
}

TEST_CASE("malformed and foreign documents are rejected", "[artifact]") {
  CHECK(load_error(testing::fixture("malformed.xml")) == ErrorKind::MalformedXml);
  CHECK(load_error("<html/>") == ErrorKind::UnrecognizedRoot);
  CHECK(load_error(R"(<knowledgeDocument xmlns="urn:other"/>)") == ErrorKind::UnrecognizedRoot);
  CHECK(load_error(R"(<knowledgeDocument xmlns="urn:hl7-org:knowledgeartifact:r1"/>)") ==
        ErrorKind::SchemaViolation);
  CHECK(load_error(document("", "Poem")) == ErrorKind::SchemaViolation);
  CHECK(load_error(document(R"(<conditions><condition/></conditions>)")) == ErrorKind::SchemaViolation);
  CHECK(load_error(document(R"(<externalData><def name="x"/></externalData>)")) == ErrorKind::SchemaViolation);
}

TEST_CASE("conflicting declarations are reported with both paths", "[artifact]") {
  auto a = load_artifact(document(R"(<externalData><def name="x" resultTypeName="t:Integer"/></externalData>)"
                                  R"(<expressions><def name="x"><expression xsi:type="elm:Literal" )"
                                  R"(valueType="t:String" value="s"/></def></expressions>)"));
  try {
    extract_symbol_env(a);
    FAIL();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DuplicateSymbol);
    CHECK(e.source_path() == "/knowledgeDocument/expressions[1]/def[1]");
    CHECK(e.related_path() == "/knowledgeDocument/externalData[1]/def[1]");
  }
}

TEST_CASE("unknown top-level sections produce warnings", "[artifact]") {
  auto a = load_artifact(document("<supportingEvidence/>"));
  REQUIRE(a.warnings.size() == 1);
  CHECK(a.warnings[0].find("supportingEvidence") != std::string::npos);
}

TEST_CASE("list result types come from type specifiers", "[artifact]") {
  auto a = load_artifact(document(
      R"(<externalData><def name="bp"><expression xsi:type="elm:Query"/>)"
      R"(<resultTypeSpecifier xsi:type="elm:ListTypeSpecifier"><elementType xsi:type="elm:NamedTypeSpecifier" )"
      R"(name="t:Integer"/></resultTypeSpecifier></def></externalData>)"));
  auto env = extract_symbol_env(a);
  CHECK(env.find("bp")->cardinality == Cardinality::List);
  CHECK(env.find("bp")->value_type_name == "Integer");
}
