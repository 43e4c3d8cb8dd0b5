//! Core library of the photostyle project: everything needed to turn a
//! directory of legislator photos into per-member face demographics and the
//! statistics built on top of them.
//!
//! The crate is organised around the stages of that pipeline:
//!
//! * [`raster`] - image decoding, grayscale, crop, resize, tensors
//! * [`detect`] - integral images and Haar-cascade face detection
//! * [`nn`] - a small convolutional network with SGD training
//! * [`corpus`] - legislator manifests, photo fetching and CSV tables
//! * [`pipeline`] - preprocessing, fine-tuning, review and classification
//! * [`stats`] - aggregation, regressions, rank tests and intervals

pub mod corpus;
pub mod detect;
pub mod nn;
pub mod pipeline;
pub mod raster;
pub mod stats;

pub use detect::{CascadeModel, DetectParams, FaceBox};
pub use pipeline::{ClassifiedFace, ClassifyReport, FineTuneConfig, ReviewQueue};
pub use nn::{NetworkModel, Prediction, RaceLabel};
pub use raster::{PixelGrid, Rect, Tensor};
