#pragma once

#include "knart/artifact.hpp"
#include "knart/codegen.hpp"
#include "knart/elm.hpp"
#include "knart/error.hpp"
#include "knart/evaluate.hpp"
#include "knart/pipeline.hpp"
#include "knart/process.hpp"
#include "knart/report.hpp"
#include "knart/sexpr.hpp"
#include "knart/solver.hpp"
#include "knart/sort.hpp"
#include "knart/xml.hpp"
