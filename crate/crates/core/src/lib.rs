//! Conditional convex risk measures on finite probability spaces, their
//! module duality, and a Boolean-valued model engine over the finite algebra
//! generated by the conditioning blocks.

pub mod boolalg;
pub mod bvm;
pub mod duality;
pub mod fixtures;
pub mod formula;
pub mod modelspaces;
pub mod probspace;
pub mod report;
pub mod riskcore;
pub mod transfer;

pub use boolalg::{BoolAlgError, BoolElem, BooleanAlgebra, LatticeOp, PartitionOfUnity};
pub use bvm::{BvmError, HfSet, Name, NameLit, Universe};
pub use duality::{DualError, DualVariable, FenchelMethod};
pub use formula::{Formula, FormulaError};
pub use probspace::{ConditionalValue, FiniteProbSpace, ProbSpaceError, RandomVariable, SpaceRef};
pub use riskcore::{Builtin, BuiltinMeasure, CondRiskMeasure, FnMeasure, RiskError};
pub use transfer::{scalarize, transfer_verify, TransferError};
