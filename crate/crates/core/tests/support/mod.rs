pub mod crank_nicolson;
