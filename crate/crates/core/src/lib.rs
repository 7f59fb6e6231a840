pub mod certificate;
pub mod dist;
pub mod frontend;
pub mod handelman;
pub mod invariant;
pub mod linear;
pub mod lp;
pub mod pcfg;
pub mod pipeline;
pub mod poly;
pub mod rational;
pub mod synth;
