"""qubit-qutrit 量子热晶体管模拟器."""

__version__ = "0.1.0"
__author__ = "Quantum Thermal Transistor Team"
__description__ = "三热库量子热晶体管稳态输运模拟器"
