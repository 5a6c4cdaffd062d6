#pragma once

#include "cocycle/bundle.hpp"
#include "cocycle/field.hpp"
#include "cocycle/generators.hpp"
#include "cocycle/io.hpp"
#include "cocycle/iterate.hpp"
#include "cocycle/qr.hpp"
#include "cocycle/reduce.hpp"
#include "cocycle/rotation.hpp"
