#pragma once

#include "eudiv/config.hpp"
#include "eudiv/dovetail.hpp"
#include "eudiv/engine.hpp"
#include "eudiv/errors.hpp"
#include "eudiv/hypothesis.hpp"
#include "eudiv/interaction.hpp"
#include "eudiv/minilang.hpp"
#include "eudiv/numeric.hpp"
#include "eudiv/parallel.hpp"
#include "eudiv/utility.hpp"
#include "eudiv/witness.hpp"
