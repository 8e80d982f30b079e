//! Batch baselines: linear SVM and random forest.

pub mod forest;
pub mod svm;

pub use forest::{majority_vote, rf_predict, rf_train, train_tree, Forest, ForestConfig, Node, Votes};
pub use svm::{primal_objective, svm_reference, svm_train, svm_train_traced, SvmConfig, SvmTrace};
